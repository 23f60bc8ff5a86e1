//! Scalar abstractions.
//!
//! [`Weight`] is anything a kernel probability can be stored in: floats,
//! and exact rationals for kernels whose moments should be computed without
//! rounding. [`Real`] adds the transcendental operations needed by the
//! uniformization oracles, quadrature and special functions.

use std::fmt::Debug;
use std::iter::Sum;

use num_rational::Rational64;
use num_traits::{Float, FloatConst, FromPrimitive, Signed, ToPrimitive};

/// A probability weight type.
pub trait Weight:
    Clone + PartialOrd + Signed + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    /// Accepted deviation of a kernel's total mass from one.
    fn mass_tolerance() -> Self;

    /// Sum of `terms`. Float implementations compensate rounding.
    fn total<I: IntoIterator<Item = Self>>(terms: I) -> Self {
        terms.into_iter().fold(Self::zero(), |acc, x| acc + x)
    }
}

fn neumaier<T: Float, I: IntoIterator<Item = T>>(terms: I) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp = comp + ((sum - t) + x);
        } else {
            comp = comp + ((x - t) + sum);
        }
        sum = t;
    }
    sum + comp
}

impl Weight for f64 {
    fn mass_tolerance() -> Self {
        1e-12
    }

    fn total<I: IntoIterator<Item = Self>>(terms: I) -> Self {
        neumaier(terms)
    }
}

impl Weight for f32 {
    fn mass_tolerance() -> Self {
        1e-6
    }

    fn total<I: IntoIterator<Item = Self>>(terms: I) -> Self {
        neumaier(terms)
    }
}

impl Weight for Rational64 {
    fn mass_tolerance() -> Self {
        Rational64::from_integer(0)
    }
}

/// Floating-point scalar used by the numerical oracles.
pub trait Real: Weight + Float + FloatConst + Sum {}

impl<T> Real for T where T: Weight + Float + FloatConst + Sum {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: FromPrimitive>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in target scalar")
}

/// Converts an integer into `T`.
#[inline]
pub fn int<T: FromPrimitive>(x: i64) -> T {
    T::from_i64(x).expect("integer representable in target scalar")
}

/// Poisson weights `e^{-λ} λ^n / n!` for `n = 0..`, up to the first `n > λ`
/// whose Chernoff tail bound `P(N ≥ n) ≤ e^{-λ}(eλ/n)^n` is below `tol`.
///
/// The weights are built outward from the mode by ratio recurrences (so
/// large means neither underflow nor accumulate log-space rounding) and
/// rescaled to sum to one; the rescaling moves at most the tail mass.
/// Returns the weights and the tail bound at truncation.
pub fn poisson_weights<T: Real>(lambda: T, tol: T) -> (Vec<T>, T) {
    if lambda <= T::zero() {
        return (vec![T::one()], T::zero());
    }
    let ln_lambda = lambda.ln();
    let ln_tol = tol.ln();
    let mut n_max: u64 = lambda.floor().to_u64().expect("finite mean") + 1;
    let tail = loop {
        let nf: T = T::from_u64(n_max).expect("count fits scalar");
        let log_tail = -lambda + nf * (T::one() + ln_lambda - nf.ln());
        if log_tail < ln_tol {
            break log_tail.exp();
        }
        n_max += 1;
    };
    let mode = lambda.floor().to_u64().expect("finite mean").min(n_max - 1);
    let lf = lambda.to_f64().expect("finite mean");
    let log_mode = -lf + mode as f64 * lf.ln() - libm::lgamma(mode as f64 + 1.0);
    let mut weights = vec![T::zero(); n_max as usize];
    weights[mode as usize] = lit(log_mode.exp());
    for n in (mode + 1)..n_max {
        let prev = weights[n as usize - 1];
        weights[n as usize] = prev * lambda / T::from_u64(n).expect("count fits scalar");
    }
    for n in (1..=mode).rev() {
        let next = weights[n as usize];
        weights[n as usize - 1] = next * T::from_u64(n).expect("count fits scalar") / lambda;
    }
    let total = T::total(weights.iter().copied());
    weights.iter_mut().for_each(|w| *w = *w / total);
    (weights, tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_beats_naive_on_cancellation() {
        let terms = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(f64::total(terms), 2.0);
    }

    #[test]
    fn rational_tolerance_is_exact() {
        assert_eq!(Rational64::mass_tolerance(), Rational64::from_integer(0));
    }

    #[test]
    fn poisson_weights_sum_to_one_within_tail() {
        for &lambda in &[0.3_f64, 5.0, 2500.0] {
            let (w, tail) = poisson_weights(lambda, 1e-12);
            let s = f64::total(w.iter().copied());
            assert!((1.0 - s) <= tail + 1e-12, "lambda={lambda} s={s}");
            assert!(tail < 1e-12);
        }
        let (w, _) = poisson_weights(5.0_f64, 1e-14);
        assert!((w[3] - 0.140_373_895_814_280_6).abs() < 1e-15);
        let (w, _) = poisson_weights(2500.0_f64, 1e-12);
        assert!((w[2500] - 0.007_978_579_650_948).abs() < 1e-14);
        let (w, tail) = poisson_weights(0.0_f64, 1e-12);
        assert_eq!(w, vec![1.0]);
        assert_eq!(tail, 0.0);
    }

    #[test]
    fn poisson_weights_f32() {
        let (w, _) = poisson_weights(3.0_f32, 1e-6);
        let s: f32 = w.iter().copied().sum();
        assert!((s - 1.0).abs() < 1e-5);
    }
}
