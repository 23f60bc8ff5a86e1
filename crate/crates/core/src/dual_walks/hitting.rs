//! Exact hitting probabilities of the difference walk.
//!
//! The walk jumps at rate 2 with kernel `p*` and is absorbed at 0. It is run
//! on `{-K..K}` by uniformization; mass jumping out of the box is parked in
//! an escape bin, so the absorbed mass is a lower bound and absorbed plus
//! escaped plus Poisson tail an upper bound on `P_z(τ ≤ s)`.

use super::{difference_walk_law, DualError};
use crate::kernel::Kernel;
use crate::scalar::{poisson_weights, Real};

pub const DEFAULT_HALF_WIDTH: i64 = 60;
const MAX_HALF_WIDTH: i64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HittingProb<T> {
    /// Absorbed mass by time `s`.
    pub prob: T,
    /// `prob + error_bound` bounds the true value from above.
    pub error_bound: T,
    pub half_width: i64,
}

/// `P_z(τ ≤ s)` for the difference walk of `k`, accurate to `tol` in
/// Poisson truncation and with escape mass below `1e-4 · prob` (or below
/// `tol` when `prob` itself is tiny).
pub fn hitting_prob<T: Real>(z: i64, k: &Kernel<T>, s: T, tol: T) -> Result<HittingProb<T>, DualError> {
    if z == 0 {
        return Err(DualError::InvalidArgument("start must be nonzero".into()));
    }
    if !(s > T::zero()) {
        return Err(DualError::InvalidArgument("horizon must be positive".into()));
    }
    let law = difference_walk_law(k);
    let (weights, tail) = poisson_weights(law.rate * s, tol);
    let mut half = DEFAULT_HALF_WIDTH.max(z.abs() + 1);
    loop {
        let (prob, escaped) = absorb(&law.kernel, z, half, &weights);
        let rel = T::from_f64(1e-4).expect("literal");
        if escaped <= rel * prob || escaped <= tol || half >= MAX_HALF_WIDTH {
            return Ok(HittingProb {
                prob,
                error_bound: escaped + tail,
                half_width: half,
            });
        }
        half *= 2;
    }
}

fn absorb<T: Real>(kernel: &Kernel<T>, z: i64, half: i64, weights: &[T]) -> (T, T) {
    let size = (2 * half + 1) as usize;
    let origin = half as usize;
    let mut cur = vec![T::zero(); size];
    let mut next = vec![T::zero(); size];
    cur[(z + half) as usize] = T::one();
    let mut absorbed = T::zero();
    let mut escaped = T::zero();
    let mut prob = T::zero();
    let mut esc = T::zero();
    for &w in &weights[1..] {
        next.iter_mut().for_each(|v| *v = T::zero());
        for (i, &m) in cur.iter().enumerate() {
            if m == T::zero() {
                continue;
            }
            for &(d, p) in kernel.entries() {
                let j = i as i64 + d;
                if j < 0 || j >= size as i64 {
                    escaped = escaped + m * p;
                } else if j as usize == origin {
                    absorbed = absorbed + m * p;
                } else {
                    next[j as usize] = next[j as usize] + m * p;
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
        prob = prob + w * absorbed;
        esc = esc + w * escaped;
    }
    (prob, esc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hitting_from_one_matches_gambler_style_limit() {
        // Recurrence: P_1(τ ≤ s) → 1.
        let k = Kernel::nearest_neighbor();
        let short = hitting_prob(1, &k, 1.0, 1e-12).unwrap().prob;
        let long = hitting_prob(1, &k, 400.0, 1e-12).unwrap().prob;
        assert!(short < long);
        assert!(long > 0.95);
    }

    #[test]
    fn nn_from_one_at_small_time() {
        // (1 - e^{-2s}) / 2 = s - s² + O(s³).
        let k = Kernel::nearest_neighbor();
        let s = 1e-3;
        let v = hitting_prob(1, &k, s, 1e-14).unwrap().prob;
        assert!((v - s).abs() < 2.0 * s * s);
    }

    #[test]
    fn bound_at_five() {
        let k = Kernel::nearest_neighbor();
        let h = hitting_prob(5, &k, 1.0, 1e-12).unwrap();
        assert!(h.prob < 4.0 / 9.0);
        assert!(h.error_bound < 1e-10);
        let sym = hitting_prob(-5, &k, 1.0, 1e-12).unwrap();
        assert!((sym.prob - h.prob).abs() < 1e-14);
    }

    #[test]
    fn rejects_degenerate_starts() {
        let k = Kernel::nearest_neighbor();
        assert!(hitting_prob(0, &k, 1.0, 1e-12).is_err());
        assert!(hitting_prob(3, &k, 0.0, 1e-12).is_err());
    }
}
