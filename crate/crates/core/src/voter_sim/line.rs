//! The voter model on `Z` in interface representation.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Exp1};

use super::rates::RateBook;
use super::{EventCount, FlipEvent, SimError};
use crate::kernel::Kernel;

/// Configuration with `η(x) = 1` for `x < l`, `η(l) = 0`, finitely many
/// ones to the right of `l`, and zeros beyond the rightmost one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineConfig {
    l: i64,
    /// Opinions on `l+1 ..= l + interior.len()`. Nonempty only if its last
    /// entry is a one, so the deque ends exactly at `r`.
    interior: VecDeque<bool>,
}

impl LineConfig {
    /// `η(x) = 1` iff `x ≤ 0`.
    pub fn heavyside() -> Self {
        LineConfig {
            l: 1,
            interior: VecDeque::new(),
        }
    }

    /// Configuration with leftmost zero `l` and the given ones to its right.
    pub fn from_parts(l: i64, ones_right: impl IntoIterator<Item = i64>) -> Result<Self, SimError> {
        let mut cfg = LineConfig {
            l,
            interior: VecDeque::new(),
        };
        for x in ones_right {
            if x <= l {
                return Err(SimError::InvalidConfig(format!(
                    "one at {x} is not right of the leftmost zero {l}"
                )));
            }
            let idx = (x - l - 1) as usize;
            if idx >= cfg.interior.len() {
                cfg.interior.resize(idx + 1, false);
            }
            cfg.interior[idx] = true;
        }
        Ok(cfg)
    }

    /// Leftmost zero.
    pub fn leftmost_zero(&self) -> i64 {
        self.l
    }

    /// Rightmost one; `l - 1` when no ones lie right of `l`.
    pub fn rightmost_one(&self) -> i64 {
        self.l + self.interior.len() as i64 - if self.interior.is_empty() { 1 } else { 0 }
    }

    pub fn width(&self) -> i64 {
        self.rightmost_one() - self.l
    }

    pub fn opinion(&self, x: i64) -> bool {
        if x < self.l {
            true
        } else if x == self.l {
            false
        } else {
            let idx = (x - self.l - 1) as usize;
            idx < self.interior.len() && self.interior[idx]
        }
    }

    /// Sorted sites `> l` holding a one.
    pub fn ones_right(&self) -> impl Iterator<Item = i64> + '_ {
        let base = self.l + 1;
        self.interior
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| base + i as i64)
    }

    /// Sets `η(x) = v`, restoring the representation invariants.
    pub fn set(&mut self, x: i64, v: bool) {
        if self.opinion(x) == v {
            return;
        }
        if x < self.l {
            // A zero planted inside the all-one region becomes the new `l`.
            let old_l = self.l;
            self.interior.push_front(false);
            for _ in (x + 1)..old_l {
                self.interior.push_front(true);
            }
            self.l = x;
        } else if x == self.l {
            match self.interior.iter().position(|&b| !b) {
                Some(j) => {
                    self.interior.drain(..=j);
                    self.l += j as i64 + 1;
                }
                None => {
                    self.l += self.interior.len() as i64 + 1;
                    self.interior.clear();
                }
            }
        } else {
            let idx = (x - self.l - 1) as usize;
            if idx >= self.interior.len() {
                self.interior.resize(idx + 1, false);
            }
            self.interior[idx] = v;
        }
        while self.interior.back() == Some(&false) {
            self.interior.pop_back();
        }
        debug_assert!(!self.opinion(self.l) && self.opinion(self.l - 1));
    }

    pub(crate) fn flip_rate(&self, k: &Kernel, x: i64) -> f64 {
        let here = self.opinion(x);
        k.entries()
            .iter()
            .filter(|(d, _)| self.opinion(x + d) != here)
            .map(|(_, p)| p)
            .sum()
    }

    /// Sites that can have a positive flip rate.
    pub(crate) fn active_window(&self, radius: i64) -> (i64, i64) {
        (self.l - radius, self.rightmost_one() + radius)
    }

    fn check_cap(&self, radius: i64, cap: u64) -> Result<(), SimError> {
        let span = (self.width() + 1 + 2 * radius).max(0) as u64;
        if span > cap {
            Err(SimError::WindowOverflow { width: span, cap })
        } else {
            Ok(())
        }
    }
}

/// Size-biased displacement sampler: `d` with weight `|d| p(d)` over one
/// side of the support.
struct SizeBiased {
    mass: f64,
    steps: Vec<i64>,
    alias: Option<WeightedAliasIndex<f64>>,
}

impl SizeBiased {
    fn new(k: &Kernel, positive: bool) -> Self {
        let (steps, weights): (Vec<i64>, Vec<f64>) = k
            .entries()
            .iter()
            .filter(|(d, _)| (*d > 0) == positive)
            .map(|(d, p)| (d.abs(), d.abs() as f64 * p))
            .unzip();
        let mass = weights.iter().sum();
        let alias = if steps.is_empty() {
            None
        } else {
            WeightedAliasIndex::new(weights).ok()
        };
        SizeBiased { mass, steps, alias }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let alias = self.alias.as_ref().expect("sampled only with positive mass");
        self.steps[alias.sample(rng)]
    }
}

/// Exact event-driven dynamics by thinning over ordered pairs `(x, y)`
/// (x copies y at rate `p(y - x)`). Pairs that can change the state are
/// split into three classes whose total rates are known in closed form:
/// `x < l ≤ y` (rate `∑_{d>0} d p(d)`), `y ≤ r < x` (rate `∑_{d<0} |d| p(d)`)
/// and `x ∈ [l, r]` (rate 1 per site). A proposed pair is accepted when the
/// two opinions differ.
pub(crate) fn evolve_thinned<R, F>(
    cfg: &mut LineConfig,
    time: &mut f64,
    k: &Kernel,
    t_end: f64,
    rng: &mut R,
    cap: u64,
    observer: &mut F,
) -> Result<EventCount, SimError>
where
    R: Rng + ?Sized,
    F: FnMut(&FlipEvent, &LineConfig),
{
    let radius = k.support_radius() as i64;
    let right = SizeBiased::new(k, true);
    let left = SizeBiased::new(k, false);
    let mut count = EventCount::default();
    loop {
        let l = cfg.leftmost_zero();
        let r = cfg.rightmost_one();
        let interior_sites = (r - l + 1).max(0);
        let total = right.mass + left.mass + interior_sites as f64;
        let dt: f64 = rng.sample::<f64, _>(Exp1) / total;
        if *time + dt > t_end {
            *time = t_end;
            return Ok(count);
        }
        *time += dt;
        count.proposed += 1;
        let u = rng.random::<f64>() * total;
        let (x, target) = if u < right.mass {
            let d = right.sample(rng);
            let x = l - d + rng.random_range(0..d);
            (x, cfg.opinion(x + d))
        } else if u < right.mass + left.mass {
            let d = left.sample(rng);
            let x = r + 1 + rng.random_range(0..d);
            (x, cfg.opinion(x - d))
        } else {
            let x = l + rng.random_range(0..interior_sites);
            (x, cfg.opinion(x + k.sample_increment(rng)))
        };
        if cfg.opinion(x) != target {
            cfg.set(x, target);
            count.flips += 1;
            observer(
                &FlipEvent {
                    time: *time,
                    site: x,
                    opinion: target,
                },
                cfg,
            );
            cfg.check_cap(radius, cap)?;
        }
    }
}

/// Dense copy of the configuration on `[lo, lo + len)` with exact per-site
/// rates. Outside the window the configuration is pure (ones left, zeros
/// right) and every rate vanishes.
struct Window {
    lo: i64,
    opinions: Vec<bool>,
    book: RateBook,
}

impl Window {
    fn build(cfg: &LineConfig, k: &Kernel) -> Self {
        let radius = k.support_radius() as i64;
        let margin = (4 * radius).max(32);
        let (a, b) = cfg.active_window(radius);
        let lo = a - margin;
        let hi = b + margin;
        let opinions: Vec<bool> = (lo..=hi).map(|x| cfg.opinion(x)).collect();
        let rates = (lo..=hi).map(|x| cfg.flip_rate(k, x)).collect();
        Window {
            lo,
            opinions,
            book: RateBook::new(rates),
        }
    }

    fn hi(&self) -> i64 {
        self.lo + self.opinions.len() as i64 - 1
    }

    fn opinion(&self, x: i64) -> bool {
        if x < self.lo {
            true
        } else if x > self.hi() {
            false
        } else {
            self.opinions[(x - self.lo) as usize]
        }
    }

    fn rate_of(&self, k: &Kernel, x: i64) -> f64 {
        let here = self.opinion(x);
        k.entries()
            .iter()
            .filter(|(d, _)| self.opinion(x + d) != here)
            .map(|(_, p)| p)
            .sum()
    }

    fn flip(&mut self, k: &Kernel, x: i64) {
        let i = (x - self.lo) as usize;
        self.opinions[i] = !self.opinions[i];
        self.book.set(i, self.rate_of(k, x));
        for (d, _) in k.entries() {
            let z = x - d;
            if z >= self.lo && z <= self.hi() {
                self.book.set((z - self.lo) as usize, self.rate_of(k, z));
            }
        }
    }
}

/// Gillespie dynamics over the active window, one event per site flip.
pub(crate) fn evolve_gillespie<R, F>(
    cfg: &mut LineConfig,
    time: &mut f64,
    k: &Kernel,
    t_end: f64,
    rng: &mut R,
    cap: u64,
    observer: &mut F,
) -> Result<EventCount, SimError>
where
    R: Rng + ?Sized,
    F: FnMut(&FlipEvent, &LineConfig),
{
    let radius = k.support_radius() as i64;
    let mut window = Window::build(cfg, k);
    let mut count = EventCount::default();
    loop {
        let total = window.book.total();
        if total <= 0.0 {
            *time = t_end;
            return Ok(count);
        }
        let dt: f64 = rng.sample::<f64, _>(Exp1) / total;
        if *time + dt > t_end {
            *time = t_end;
            return Ok(count);
        }
        *time += dt;
        count.proposed += 1;
        let i = window.book.pick(rng.random::<f64>());
        if window.book.rate(i) <= 0.0 {
            continue;
        }
        let x = window.lo + i as i64;
        let v = !window.opinions[i];
        window.flip(k, x);
        cfg.set(x, v);
        count.flips += 1;
        observer(
            &FlipEvent {
                time: *time,
                site: x,
                opinion: v,
            },
            cfg,
        );
        cfg.check_cap(radius, cap)?;
        let (a, b) = cfg.active_window(radius);
        if a < window.lo || b > window.hi() {
            window = Window::build(cfg, k);
        }
    }
}

/// `∑_x flip_rate(x)` over the active window.
pub(crate) fn total_flip_rate(cfg: &LineConfig, k: &Kernel) -> f64 {
    let (a, b) = cfg.active_window(k.support_radius() as i64);
    (a..=b).map(|x| cfg.flip_rate(k, x)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(cfg: &LineConfig, lo: i64, hi: i64) -> Vec<bool> {
        (lo..=hi).map(|x| cfg.opinion(x)).collect()
    }

    #[test]
    fn heavyside_shape() {
        let c = LineConfig::heavyside();
        assert_eq!((c.leftmost_zero(), c.rightmost_one(), c.width()), (1, 0, -1));
        assert!(c.opinion(0));
        assert!(!c.opinion(1));
    }

    #[test]
    fn from_parts_stats() {
        let c = LineConfig::from_parts(1, [3, 7]).unwrap();
        assert_eq!((c.leftmost_zero(), c.rightmost_one(), c.width()), (1, 7, 6));
        assert_eq!(c.ones_right().collect::<Vec<_>>(), vec![3, 7]);
        assert!(LineConfig::from_parts(1, [1]).is_err());
    }

    #[test]
    fn set_cases() {
        let mut c = LineConfig::heavyside();
        c.set(-3, false);
        assert_eq!(c.leftmost_zero(), -3);
        assert_eq!(c.ones_right().collect::<Vec<_>>(), vec![-2, -1, 0]);
        c.set(-3, true);
        assert_eq!(c.leftmost_zero(), 1);
        assert_eq!(c.width(), -1);
        c.set(5, true);
        assert_eq!(c.rightmost_one(), 5);
        c.set(5, false);
        assert_eq!(c, LineConfig::heavyside());
        c.set(0, false);
        assert_eq!(c.leftmost_zero(), 0);
        assert_eq!(c.width(), -1);
    }

    proptest! {
        #[test]
        fn set_matches_dense_model(ops in proptest::collection::vec((-12i64..12, any::<bool>()), 0..60)) {
            let mut c = LineConfig::heavyside();
            let mut dense: Vec<bool> = (-40..=40).map(|x| x <= 0).collect();
            for (x, v) in ops {
                c.set(x, v);
                dense[(x + 40) as usize] = v;
                prop_assert_eq!(brute(&c, -40, 40), dense.clone());
                let l = c.leftmost_zero();
                prop_assert!(!c.opinion(l));
                prop_assert!((l - 5..l).all(|y| c.opinion(y)));
                prop_assert!(c.width() >= -1);
            }
        }
    }
}
