//! Time-`t` law of a continuous-time random walk by uniformization.

use std::fmt::Write as _;

use super::DualError;
use crate::kernel::Kernel;
use crate::scalar::{int, lit, poisson_weights, Real};

/// Default cap on the pmf window half-width.
pub const DEFAULT_MAX_WINDOW: i64 = 1 << 22;

/// Law of `S_t` for a walk jumping at `rate` with kernel `p`, on
/// `[-window, window]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CtrwPmf<T: Real = f64> {
    pub t: T,
    pub rate: T,
    pub window: i64,
    probs: Vec<T>,
    /// Mass missing from `probs`: Poisson tail bound plus mass that left the
    /// window.
    pub truncation_error: T,
}

impl<T: Real> CtrwPmf<T> {
    pub fn prob(&self, d: i64) -> T {
        if d.abs() > self.window {
            T::zero()
        } else {
            self.probs[(d + self.window) as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, T)> + '_ {
        let w = self.window;
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (i as i64 - w, p))
    }

    pub fn total_mass(&self) -> T {
        T::total(self.probs.iter().copied())
    }

    pub fn mean(&self) -> T {
        T::total(self.iter().map(|(d, p)| int::<T>(d) * p))
    }

    pub fn second_moment(&self) -> T {
        T::total(self.iter().map(|(d, p)| int::<T>(d) * int::<T>(d) * p))
    }

    /// `P(S_t ≤ d)`.
    pub fn cdf(&self, d: i64) -> T {
        if d < -self.window {
            return T::zero();
        }
        let hi = d.min(self.window);
        T::total((-self.window..=hi).map(|x| self.prob(x)))
    }

    /// CSV dump: `# t=…,rate=…,truncation_error=…` then
    /// `displacement,probability` rows.
    pub fn to_csv(&self) -> String
    where
        T: std::fmt::Display,
    {
        let mut s = format!(
            "# t={},rate={},truncation_error={}\ndisplacement,probability\n",
            self.t, self.rate, self.truncation_error
        );
        for (d, p) in self.iter() {
            let _ = writeln!(s, "{d},{p}");
        }
        s
    }
}

/// Uniformized pmf `∑_n e^{-rt}(rt)^n/n! p^{*n}`, truncated once the Poisson
/// tail is below `tol / 2`; the window grows until leaked mass is below
/// `tol / 2`.
pub fn ctrw_pmf<T: Real>(k: &Kernel<T>, rate: T, t: T, tol: T) -> Result<CtrwPmf<T>, DualError> {
    ctrw_pmf_capped(k, rate, t, tol, DEFAULT_MAX_WINDOW)
}

pub fn ctrw_pmf_capped<T: Real>(
    k: &Kernel<T>,
    rate: T,
    t: T,
    tol: T,
    max_window: i64,
) -> Result<CtrwPmf<T>, DualError> {
    if t < T::zero() || rate < T::zero() || !(tol > T::zero()) {
        return Err(DualError::InvalidArgument(format!(
            "ctrw_pmf needs t >= 0, rate >= 0, tol > 0 (t={t:?}, rate={rate:?}, tol={tol:?})"
        )));
    }
    let half = tol / lit(2.0);
    let lambda = rate * t;
    let (weights, poisson_tail) = poisson_weights(lambda, half);
    let n_max = (weights.len() - 1) as i64;
    let radius = k.support_radius() as i64;
    let reach = radius.saturating_mul(n_max);
    let spread = (k.sigma2() * lambda).sqrt().to_f64().unwrap_or(0.0);
    let mut window = reach.min((10.0 * spread).ceil() as i64 + radius);
    loop {
        if window > max_window {
            return Err(DualError::WindowTooLarge {
                window,
                cap: max_window,
            });
        }
        let (probs, leaked) = uniformize(k, &weights, window);
        if leaked < half || window >= reach {
            return Ok(CtrwPmf {
                t,
                rate,
                window,
                probs,
                truncation_error: poisson_tail + leaked,
            });
        }
        window = (window * 2).min(reach);
    }
}

fn uniformize<T: Real>(k: &Kernel<T>, weights: &[T], window: i64) -> (Vec<T>, T) {
    let top = 2 * window;
    let size = (top + 1) as usize;
    let mut cur = vec![T::zero(); size];
    let mut next = vec![T::zero(); size];
    let mut acc = vec![T::zero(); size];
    cur[window as usize] = T::one();
    acc[window as usize] = weights[0];
    let dmin = k.entries().first().map_or(0, |e| e.0);
    let dmax = k.entries().last().map_or(0, |e| e.0);
    // Only `cur[lo..=hi]` is meaningful; cells outside may hold stale values.
    let (mut lo, mut hi) = (window, window);
    let mut lost = T::zero();
    let mut weighted_leak = T::zero();
    for &w in &weights[1..] {
        let nlo = (lo + dmin).max(0);
        let nhi = (hi + dmax).min(top);
        if nlo > nhi {
            lost = lost + T::total((lo..=hi).map(|i| cur[i as usize]));
            (lo..=hi).for_each(|i| cur[i as usize] = T::zero());
            weighted_leak = weighted_leak + w * lost;
            continue;
        }
        (nlo..=nhi).for_each(|i| next[i as usize] = T::zero());
        for &(d, p) in k.entries() {
            for i in lo..=hi {
                let m = cur[i as usize];
                let j = i + d;
                if j < 0 || j > top {
                    lost = lost + m * p;
                } else {
                    next[j as usize] = next[j as usize] + m * p;
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
        lo = nlo;
        hi = nhi;
        for i in lo..=hi {
            acc[i as usize] = acc[i as usize] + w * cur[i as usize];
        }
        weighted_leak = weighted_leak + w * lost;
    }
    (acc, weighted_leak)
}

/// `P(η_t(x) = 1)` from the heavy-side start, `P(x + S_t ≤ 0)` with `S` the
/// rate-1 walk with kernel `p`.
pub fn one_point_prob<T: Real>(x: i64, t: T, k: &Kernel<T>, tol: T) -> Result<T, DualError> {
    let pmf = ctrw_pmf(k, T::one(), t, tol)?;
    Ok(pmf.cdf(-x))
}
