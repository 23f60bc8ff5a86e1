//! Exact transient laws on small tori: the voter model itself on `2^L`
//! configurations, and the dual coalescing walkers on `L^k` position tuples.

use std::fmt::Write as _;

use thiserror::Error;

use crate::kernel::Kernel;
use crate::scalar::{poisson_weights, Real};
use crate::voter_sim::bits_to_hex;

pub const MAX_TORUS_LEN: usize = 12;
pub const MAX_DUAL_SITES: usize = 3;
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("torus length {len} exceeds the exact-oracle limit {max}")]
    TooLarge { len: usize, max: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateSpace {
    /// `{0,1}^L`, configuration index `∑ η(i) 2^i`.
    TorusConfigs { len: usize },
    /// Walker positions on `Z/LZ`, index `∑ y_j L^j`. Walkers at the same
    /// site are coalesced.
    WalkerConfigs { walkers: usize, len: usize },
    /// `(η(x_1), …, η(x_k))`, index `∑ η(x_j) 2^j`.
    SiteOpinions { sites: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistVector<T: Real = f64> {
    pub space: StateSpace,
    pub probs: Vec<T>,
    pub t: T,
    pub tol: T,
}

impl<T: Real> DistVector<T> {
    pub fn total_mass(&self) -> T {
        T::total(self.probs.iter().copied())
    }

    /// CSV with `config_bits_hex,probability` rows (walker spaces list the
    /// positions instead).
    pub fn to_csv(&self) -> String
    where
        T: std::fmt::Display,
    {
        let mut out = String::new();
        match self.space {
            StateSpace::TorusConfigs { len } | StateSpace::SiteOpinions { sites: len } => {
                out.push_str("config_bits_hex,probability\n");
                for (i, p) in self.probs.iter().enumerate() {
                    let bits: Vec<bool> = (0..len).map(|j| i >> j & 1 == 1).collect();
                    let _ = writeln!(out, "{},{p}", bits_to_hex(&bits));
                }
            }
            StateSpace::WalkerConfigs { walkers, len } => {
                out.push_str("positions,probability\n");
                for (i, p) in self.probs.iter().enumerate() {
                    let pos: Vec<String> = decode(i, walkers, len).iter().map(ToString::to_string).collect();
                    let _ = writeln!(out, "{},{p}", pos.join(";"));
                }
            }
        }
        out
    }
}

fn config_index(init: &[bool]) -> usize {
    init.iter()
        .enumerate()
        .fold(0, |acc, (i, &b)| acc | (usize::from(b) << i))
}

fn nonzero_residues<T: Real>(k: &Kernel<T>, len: usize) -> (Vec<(usize, T)>, T) {
    let proj = k.projected_mod(len);
    let stay = proj[0];
    let moves = proj
        .into_iter()
        .enumerate()
        .skip(1)
        .filter(|(_, m)| *m > T::zero())
        .collect();
    (moves, stay)
}

/// Sum of Poisson-weighted powers `∑_n w_n Uⁿ δ_start` for an operator
/// given by `step(src, dst)`, which must add `U·src` into `dst`.
fn uniformized<T: Real>(
    size: usize,
    start: usize,
    weights: &[T],
    mut step: impl FnMut(&[T], &mut [T]),
) -> Vec<T> {
    let mut cur = vec![T::zero(); size];
    let mut next = vec![T::zero(); size];
    let mut acc = vec![T::zero(); size];
    cur[start] = T::one();
    acc[start] = weights[0];
    for &w in &weights[1..] {
        next.iter_mut().for_each(|v| *v = T::zero());
        step(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        for (a, &c) in acc.iter_mut().zip(&cur) {
            *a = *a + w * c;
        }
    }
    acc
}

/// Law of `η_t` on `Z/LZ` started from `init`. Uniformization at rate `L`:
/// a uniform site copies the site at a `p`-distributed offset.
pub fn transient_dist<T: Real>(
    len: usize,
    k: &Kernel<T>,
    init: &[bool],
    t: T,
    tol: T,
) -> Result<DistVector<T>, OracleError> {
    if len > MAX_TORUS_LEN {
        return Err(OracleError::TooLarge {
            len,
            max: MAX_TORUS_LEN,
        });
    }
    if len < 2 || init.len() != len {
        return Err(OracleError::InvalidArgument(format!(
            "need 2 <= L and init of length L (L={len}, init has {})",
            init.len()
        )));
    }
    check_time(t, tol)?;
    let lambda = T::from_usize(len).expect("small");
    let (weights, _) = poisson_weights(lambda * t, tol);
    let (moves, stay) = nonzero_residues(k, len);
    let inv = T::one() / lambda;
    let size = 1usize << len;
    let probs = uniformized(size, config_index(init), &weights, |src, dst| {
        for (eta, &m) in src.iter().enumerate() {
            if m == T::zero() {
                continue;
            }
            let m = m * inv;
            for x in 0..len {
                let bit = eta >> x & 1;
                let mut same = stay;
                for &(r, p) in &moves {
                    if eta >> ((x + r) % len) & 1 == bit {
                        same = same + p;
                    } else {
                        let to = eta ^ (1 << x);
                        dst[to] = dst[to] + m * p;
                    }
                }
                dst[eta] = dst[eta] + m * same;
            }
        }
    });
    Ok(DistVector {
        space: StateSpace::TorusConfigs { len },
        probs,
        t,
        tol,
    })
}

fn check_time<T: Real>(t: T, tol: T) -> Result<(), OracleError> {
    if t < T::zero() || !(tol > T::zero()) {
        return Err(OracleError::InvalidArgument(format!(
            "need t >= 0 and tol > 0 (t={t:?}, tol={tol:?})"
        )));
    }
    Ok(())
}

fn decode(mut idx: usize, walkers: usize, len: usize) -> Vec<usize> {
    (0..walkers)
        .map(|_| {
            let y = idx % len;
            idx /= len;
            y
        })
        .collect()
}

fn encode(pos: &[usize], len: usize) -> usize {
    pos.iter().rev().fold(0, |acc, &y| acc * len + y)
}

/// Law at backward time `t` of coalescing walkers on `Z/LZ` started at
/// `sites`. Each occupied site jumps at rate 1, carrying every walker on it.
pub fn dual_walker_law<T: Real>(
    len: usize,
    k: &Kernel<T>,
    sites: &[usize],
    t: T,
    tol: T,
) -> Result<DistVector<T>, OracleError> {
    if sites.is_empty() || sites.len() > MAX_DUAL_SITES {
        return Err(OracleError::InvalidArgument(format!(
            "need 1 to {MAX_DUAL_SITES} sites, got {}",
            sites.len()
        )));
    }
    if !(2..=64).contains(&len) || sites.iter().any(|&x| x >= len) {
        return Err(OracleError::InvalidArgument(format!(
            "sites must lie on a torus of length 2..=64 (L={len})"
        )));
    }
    check_time(t, tol)?;
    let walkers = sites.len();
    let lambda = T::from_usize(walkers).expect("small");
    let (weights, _) = poisson_weights(lambda * t, tol);
    let (moves, _) = nonzero_residues(k, len);
    let inv = T::one() / lambda;
    let size = len.pow(walkers as u32);
    let probs = uniformized(size, encode(sites, len), &weights, |src, dst| {
        for (idx, &m) in src.iter().enumerate() {
            if m == T::zero() {
                continue;
            }
            let m = m * inv;
            let pos = decode(idx, walkers, len);
            let mut moved = T::zero();
            for (j, &y) in pos.iter().enumerate() {
                // Each cluster is driven once, by its first walker.
                if pos[..j].contains(&y) {
                    continue;
                }
                for &(r, p) in &moves {
                    let to: Vec<usize> = pos
                        .iter()
                        .map(|&z| if z == y { (z + r) % len } else { z })
                        .collect();
                    let ti = encode(&to, len);
                    dst[ti] = dst[ti] + m * p;
                    moved = moved + p;
                }
            }
            dst[idx] = dst[idx] + m * (lambda - moved);
        }
    });
    Ok(DistVector {
        space: StateSpace::WalkerConfigs { walkers, len },
        probs,
        t,
        tol,
    })
}

/// Joint law of `(η_t(x))_{x ∈ sites}` computed through the dual walkers:
/// `η_t(x) = η_0(Y^{x,t}_t)`.
pub fn dual_marginal<T: Real>(
    len: usize,
    k: &Kernel<T>,
    sites: &[usize],
    init: &[bool],
    t: T,
    tol: T,
) -> Result<DistVector<T>, OracleError> {
    if init.len() != len {
        return Err(OracleError::InvalidArgument(format!(
            "init has {} sites, torus has {len}",
            init.len()
        )));
    }
    let law = dual_walker_law(len, k, sites, t, tol)?;
    let walkers = sites.len();
    let mut probs = vec![T::zero(); 1 << walkers];
    for (idx, &p) in law.probs.iter().enumerate() {
        let pos = decode(idx, walkers, len);
        let bits: Vec<bool> = pos.iter().map(|&y| init[y]).collect();
        let o = config_index(&bits);
        probs[o] = probs[o] + p;
    }
    Ok(DistVector {
        space: StateSpace::SiteOpinions { sites: walkers },
        probs,
        t,
        tol,
    })
}

/// Joint law of `(η(x))_{x ∈ sites}` from a full configuration law.
pub fn marginalize<T: Real>(d: &DistVector<T>, sites: &[usize]) -> Vec<T> {
    let mut out = vec![T::zero(); 1 << sites.len()];
    for (eta, &p) in d.probs.iter().enumerate() {
        let o = sites
            .iter()
            .enumerate()
            .fold(0, |acc, (j, &x)| acc | ((eta >> x & 1) << j));
        out[o] = out[o] + p;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nn() -> Kernel {
        Kernel::nearest_neighbor()
    }

    #[test]
    fn two_site_chain_analytic() {
        // init 01: site 0 holds 0, site 1 holds 1.
        for t in [0.0, 0.2, 1.0, 3.0] {
            let d = transient_dist(2, &nn(), &[false, true], t, 1e-13).unwrap();
            let e = f64::exp(-2.0 * t);
            assert!((d.probs[0b10] - e).abs() < 1e-12);
            assert!((d.probs[0b00] - (1.0 - e) / 2.0).abs() < 1e-12);
            assert!((d.probs[0b11] - (1.0 - e) / 2.0).abs() < 1e-12);
            assert!(d.probs[0b01].abs() < 1e-15);
        }
    }

    #[test]
    fn absorbing_and_time_zero() {
        let d = transient_dist(5, &nn(), &[true; 5], 2.0, 1e-12).unwrap();
        assert!((d.probs[31] - 1.0).abs() < 1e-12);
        let init = [true, false, false, true, false, true];
        let d = transient_dist(6, &nn(), &init, 0.0, 1e-12).unwrap();
        assert_eq!(d.probs[config_index(&init)], 1.0);
        assert!(transient_dist(13, &nn(), &[false; 13], 1.0, 1e-10).is_err());
    }

    #[test]
    fn mass_and_consensus_absorption() {
        let k = crate::kernel::truncated_pareto_kernel(1.5f64, 3).unwrap();
        let init = [true, true, false, true, false, false];
        let mut prev = 1.0;
        for t in [1.0, 2.0, 4.0] {
            let d = transient_dist(6, &k, &init, t, 1e-12).unwrap();
            assert!((d.total_mass() - 1.0).abs() < 1e-10);
            assert!(d.probs.iter().all(|&p| p >= -1e-15));
            let mixed = 1.0 - d.probs[0] - d.probs[63];
            assert!(mixed < prev);
            prev = mixed;
        }
    }

    #[test]
    fn relabelling_symmetry() {
        let k = Kernel::<f64>::new([(-1, 0.6), (2, 0.4)]).unwrap();
        let init = [true, false, false, true, false];
        let flipped: Vec<bool> = init.iter().map(|b| !b).collect();
        let a = transient_dist(5, &k, &init, 1.3, 1e-12).unwrap();
        let b = transient_dist(5, &k, &flipped, 1.3, 1e-12).unwrap();
        for eta in 0..32 {
            assert!((a.probs[eta] - b.probs[eta ^ 31]).abs() < 1e-12);
        }
    }

    #[test]
    fn duality_at_exact_level() {
        let kernels = [
            nn(),
            Kernel::new([(-1, 2.0 / 3.0), (2, 1.0 / 3.0)]).unwrap(),
            crate::kernel::truncated_pareto_kernel(1.5f64, 4).unwrap(),
        ];
        let tol = 1e-11;
        for k in &kernels {
            for len in [3usize, 5, 6] {
                let init: Vec<bool> = (0..len).map(|i| i < len / 2).collect();
                for t in [0.5, 2.0] {
                    let full = transient_dist(len, k, &init, t, tol).unwrap();
                    for sites in [vec![0], vec![len - 1], vec![0, 1], vec![0, 2, len - 1]] {
                        let dual = dual_marginal(len, k, &sites, &init, t, tol).unwrap();
                        let direct = marginalize(&full, &sites);
                        for (a, b) in dual.probs.iter().zip(&direct) {
                            assert!((a - b).abs() < 2.0 * tol, "len {len} t {t} {sites:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn duplicated_sites_agree() {
        let init = [true, false, true, false];
        let d = dual_marginal(4, &nn(), &[1, 1], &init, 1.5, 1e-12).unwrap();
        assert!(d.probs[0b01].abs() < 1e-15 && d.probs[0b10].abs() < 1e-15);
        assert!((d.total_mass() - 1.0).abs() < 1e-11);
        let d = dual_marginal(4, &nn(), &[0, 1, 3], &init, 0.0, 1e-12).unwrap();
        assert_eq!(d.probs[0b001], 1.0);
    }

    #[test]
    fn walker_law_and_csv() {
        let d = dual_walker_law(4, &nn(), &[0, 2], 0.0, 1e-12).unwrap();
        assert_eq!(d.probs[encode(&[0, 2], 4)], 1.0);
        assert!(d.to_csv().starts_with("positions,probability\n0;0,0\n"));
        let t = transient_dist(2, &nn(), &[false, true], 0.0, 1e-12).unwrap();
        assert_eq!(t.to_csv(), "config_bits_hex,probability\n0,0\n1,0\n2,1\n3,0\n");
    }

    #[test]
    fn f32_runs() {
        let k = Kernel::new([(-1, 0.5f32), (1, 0.5)]).unwrap();
        let d = transient_dist(3, &k, &[true, false, false], 1.0f32, 1e-6).unwrap();
        assert!((d.total_mass() - 1.0).abs() < 1e-5);
    }
}
