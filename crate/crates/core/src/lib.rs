//! Simulation and Monte Carlo verification of the one-dimensional voter
//! model interface and its diffusive scaling limit.
//!
//! Numerical code is generic over the scalar type through [`scalar::Real`]
//! (and [`scalar::Weight`] for kernels, which also admits exact rationals).
//! The aliases below fix the common choices.

// `!(x > 0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod brownian_limit;
pub mod dual_walks;
pub mod exact_oracle;
pub mod fenwick;
pub mod kernel;
pub mod mc_harness;
pub mod observables;
pub mod scalar;
pub mod voter_sim;

pub use kernel::{truncated_pareto_kernel, Kernel, KernelError, KernelSpec};
pub use observables::TestFunction;
pub use voter_sim::{init_heavyside, init_torus, VoterState};

pub type Kernel64 = kernel::Kernel<f64>;
pub type Kernel32 = kernel::Kernel<f32>;
pub type RationalKernel = kernel::Kernel<num_rational::Rational64>;
pub type CtrwPmf64 = dual_walks::CtrwPmf<f64>;
pub type DistVector64 = exact_oracle::DistVector<f64>;
pub type TestFunction64 = observables::TestFunction<f64>;
pub type TestFunction32 = observables::TestFunction<f32>;
