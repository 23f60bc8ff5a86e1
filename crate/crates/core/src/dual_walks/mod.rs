//! Backward coalescing random walks, the difference walk and its hitting
//! time, and exact walk marginals.

mod ctrw;
mod hitting;

pub use ctrw::{ctrw_pmf, ctrw_pmf_capped, one_point_prob, CtrwPmf, DEFAULT_MAX_WINDOW};
pub use hitting::{hitting_prob, HittingProb, DEFAULT_HALF_WIDTH};

use rand::Rng;
use rand_distr::Exp1;
use thiserror::Error;

use crate::kernel::Kernel;
use crate::scalar::{Real, Weight};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DualError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("pmf window half-width {window} exceeds cap {cap}")]
    WindowTooLarge { window: i64, cap: i64 },
}

/// Coalescing walkers run backwards from their start points.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalescingWalkSet {
    pub starts: Vec<(i64, f64)>,
    pub positions: Vec<i64>,
    /// Cluster of each walker, labelled by its smallest member index.
    pub partition: Vec<usize>,
    /// Backward time left until 0.
    pub clock: f64,
}

impl CoalescingWalkSet {
    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn cluster_count(&self) -> usize {
        self.partition
            .iter()
            .enumerate()
            .filter(|&(i, &c)| i == c)
            .count()
    }

    pub fn coalesced(&self, i: usize, j: usize) -> bool {
        self.partition[i] == self.partition[j]
    }
}

/// Runs walkers started at `(x_i, t_i)` down to backward time 0. Walker `i`
/// is dormant until the clock reaches `t_i`; each live cluster jumps at
/// rate 1 by `d ~ p`, and clusters sharing a site merge.
pub fn sample_coalescing<R: Rng + ?Sized, T: Weight>(
    starts: &[(i64, f64)],
    k: &Kernel<T>,
    rng: &mut R,
) -> CoalescingWalkSet {
    let n = starts.len();
    assert!(starts.iter().all(|s| s.1 >= 0.0), "start times must be nonnegative");
    let mut order: Vec<usize> = (0..n).collect();
    // Latest start first; ties by index.
    order.sort_by(|&a, &b| starts[b].1.total_cmp(&starts[a].1).then(a.cmp(&b)));
    let mut positions: Vec<i64> = starts.iter().map(|s| s.0).collect();
    let mut partition: Vec<usize> = (0..n).collect();
    // Cluster representatives currently moving.
    let mut live: Vec<usize> = Vec::with_capacity(n);
    let mut clock = order.first().map_or(0.0, |&i| starts[i].1);
    let mut next = 0;
    loop {
        while next < n && starts[order[next]].1 >= clock {
            let i = order[next];
            next += 1;
            match live.iter().find(|&&c| positions[c] == positions[i]) {
                Some(&c) => join(&mut partition, &mut live, c, i),
                None => live.push(i),
            }
        }
        if live.is_empty() {
            break;
        }
        let wake = if next < n { starts[order[next]].1 } else { 0.0 };
        let dt = rng.sample::<f64, _>(Exp1) / live.len() as f64;
        if clock - dt <= wake {
            clock = wake;
            if next >= n {
                break;
            }
            continue;
        }
        clock -= dt;
        let c = live[rng.random_range(0..live.len())];
        let to = positions[c] + k.sample_increment(rng);
        for (w, p) in positions.iter_mut().enumerate() {
            if partition[w] == c {
                *p = to;
            }
        }
        if let Some(&other) = live.iter().find(|&&o| o != c && positions[o] == to) {
            join(&mut partition, &mut live, other, c);
        }
    }
    CoalescingWalkSet {
        starts: starts.to_vec(),
        positions,
        partition,
        clock: 0.0,
    }
}

/// Merges clusters `a` and `b` (representatives), relabelling to the
/// smaller index.
fn join(partition: &mut [usize], live: &mut Vec<usize>, a: usize, b: usize) {
    let (keep, drop) = if a < b { (a, b) } else { (b, a) };
    for c in partition.iter_mut() {
        if *c == drop {
            *c = keep;
        }
    }
    live.retain(|&c| c != drop);
    if !live.contains(&keep) {
        live.push(keep);
    }
}

/// A kernel together with a jump rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RatedKernel<T: Weight = f64> {
    pub rate: T,
    pub kernel: Kernel<T>,
}

/// Law of `X_s - Y_s` for independent walkers with kernel `k`: rate 2,
/// kernel `p*`.
pub fn difference_walk_law<T: Weight>(k: &Kernel<T>) -> RatedKernel<T> {
    RatedKernel {
        rate: T::one() + T::one(),
        kernel: k.symmetrize(),
    }
}

/// Outcome of one difference-walk run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HittingSample {
    /// `τ ∧ s_max`.
    pub time: f64,
    pub hit: bool,
}

/// Runs the difference walk of `k` from `z` until it hits 0 or `s_max`.
pub fn hitting_time_sample<R: Rng + ?Sized, T: Weight>(
    z: i64,
    k: &Kernel<T>,
    s_max: f64,
    rng: &mut R,
) -> Result<HittingSample, DualError> {
    if z == 0 {
        return Err(DualError::InvalidArgument("start must be nonzero".into()));
    }
    if !(s_max > 0.0) {
        return Err(DualError::InvalidArgument("s_max must be positive".into()));
    }
    let law = difference_walk_law(k);
    let rate = law.rate.to_f64().expect("finite rate");
    let mut w = z;
    let mut s = 0.0;
    loop {
        s += rng.sample::<f64, _>(Exp1) / rate;
        if s > s_max {
            return Ok(HittingSample {
                time: s_max,
                hit: false,
            });
        }
        w += law.kernel.sample_increment(rng);
        if w == 0 {
            return Ok(HittingSample { time: s, hit: true });
        }
    }
}

/// `4σ²s / (|z| - 2σ√s)²` for `|z| > 2σ√s`, else `None`.
pub fn chebyshev_hitting_bound<T: Real>(z: i64, sigma2: T, s: T) -> Option<T> {
    let two = T::one() + T::one();
    let margin = T::from_i64(z.abs()).expect("finite") - two * (sigma2 * s).sqrt();
    if margin > T::zero() {
        Some(two * two * sigma2 * s / (margin * margin))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc_harness::replica_rng;

    #[test]
    fn single_walker_is_free_walk() {
        let k = Kernel::nearest_neighbor();
        let mut rng = replica_rng(7, 0);
        let n = 20_000;
        let t = 2.0;
        let mut counts = std::collections::BTreeMap::new();
        for _ in 0..n {
            let s = sample_coalescing(&[(3, t)], &k, &mut rng);
            *counts.entry(s.positions[0] - 3).or_insert(0usize) += 1;
        }
        let pmf = ctrw_pmf(&k, 1.0, t, 1e-12).unwrap();
        let tv: f64 = pmf
            .iter()
            .map(|(d, p)| (p - *counts.get(&d).unwrap_or(&0) as f64 / n as f64).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.02, "tv {tv}");
    }

    #[test]
    fn identical_starts_merge_immediately() {
        let k = Kernel::nearest_neighbor();
        let mut rng = replica_rng(1, 0);
        for _ in 0..100 {
            let s = sample_coalescing(&[(4, 1.5), (4, 1.5)], &k, &mut rng);
            assert_eq!(s.cluster_count(), 1);
            assert_eq!(s.positions[0], s.positions[1]);
        }
    }

    #[test]
    fn staggered_starts_and_late_joiner() {
        let k = Kernel::nearest_neighbor();
        let mut rng = replica_rng(2, 0);
        // Walker 1 starts at time 0, so it never moves.
        for _ in 0..200 {
            let s = sample_coalescing(&[(0, 1.0), (5, 0.0)], &k, &mut rng);
            assert_eq!(s.positions[1], 5);
            assert_eq!(s.clock, 0.0);
            if s.coalesced(0, 1) {
                assert_eq!(s.positions[0], 5);
            }
        }
        let s = sample_coalescing(&[(0, 0.0)], &k, &mut rng);
        assert_eq!(s.positions, vec![0]);
    }

    #[test]
    fn nn_walkers_never_cross() {
        let k = Kernel::nearest_neighbor();
        let mut rng = replica_rng(3, 0);
        for _ in 0..500 {
            let s = sample_coalescing(&[(0, 3.0), (1, 3.0), (2, 3.0)], &k, &mut rng);
            assert!(s.positions[0] <= s.positions[1]);
            assert!(s.positions[1] <= s.positions[2]);
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(s.coalesced(i, j), s.partition[i] == s.partition[j]);
                    if s.coalesced(i, j) {
                        assert_eq!(s.positions[i], s.positions[j]);
                    }
                }
            }
        }
    }

    #[test]
    fn difference_law_examples() {
        let d = difference_walk_law(&Kernel::nearest_neighbor());
        assert_eq!(d.rate, 2.0);
        assert_eq!(d.kernel.entries(), &[(-1, 0.5), (1, 0.5)]);
        let k = Kernel::<f64>::new([(-1, 2.0 / 3.0), (2, 1.0 / 3.0)]).unwrap();
        let d = difference_walk_law(&k);
        let e = d.kernel.entries();
        assert_eq!(e.len(), 4);
        assert!((d.kernel.prob(1) - 1.0 / 3.0).abs() < 1e-15);
        assert!((d.kernel.prob(-2) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn hitting_sample_errors_and_recurrence() {
        let k = Kernel::nearest_neighbor();
        let mut rng = replica_rng(4, 0);
        assert!(hitting_time_sample(0, &k, 1.0, &mut rng).is_err());
        assert!(hitting_time_sample(1, &k, 0.0, &mut rng).is_err());
        let hits = (0..400)
            .filter(|_| hitting_time_sample(1, &k, 1e4, &mut rng).unwrap().hit)
            .count();
        assert!(hits > 380);
    }

    #[test]
    fn stated_bound_at_ten() {
        let b = chebyshev_hitting_bound(10, 1.0f64, 1.0).unwrap();
        assert!((b - 0.0625).abs() < 1e-15);
        assert!(chebyshev_hitting_bound(2, 1.0f64, 1.0).is_none());
    }
}
