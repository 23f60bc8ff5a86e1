//! Limit objects: `σB_t`, backward coalescing Brownian motions, and the
//! moments of `ν_t = 1{x < σB_t} dx`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::observables::TestFunction;
use crate::scalar::{lit, Real};

/// Standard normal CDF.
pub fn normal_cdf<T: Real>(x: T) -> T {
    let v = x.to_f64().expect("finite argument");
    lit(0.5 * libm::erfc(-v / std::f64::consts::SQRT_2))
}

/// `P(u < σB_t) = Φ(-u / (σ√t))`; at `t = 0` the step `1{u < 0}`.
pub fn limit_one_point<T: Real>(u: T, t: T, sigma: T) -> T {
    if t <= T::zero() {
        return if u < T::zero() { T::one() } else { T::zero() };
    }
    normal_cdf(-u / (sigma * t.sqrt()))
}

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T) -> T {
    if !(b > a) {
        return T::zero();
    }
    let m = (a + b) / lit(2.0);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / lit(6.0) * (fa + lit::<T>(4.0) * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<T: Real, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
) -> T {
    let two = lit::<T>(2.0);
    let m = (a + b) / two;
    let (lm, rm) = ((a + m) / two, (m + b) / two);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / lit(6.0) * (fa + lit::<T>(4.0) * flm + fm);
    let right = (b - m) / lit(6.0) * (fm + lit::<T>(4.0) * frm + fb);
    let err = left + right - whole;
    if depth == 0 || err.abs() <= lit::<T>(15.0) * tol {
        left + right + err / lit(15.0)
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, tol / two, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, tol / two, depth - 1)
    }
}

/// Integrates over the smooth pieces of a bump's support.
fn over_bump<T: Real, F: Fn(T) -> T>(f: &TestFunction<T>, lo: T, g: &F, tol: T) -> T {
    let knots = [f.a, f.a + f.w, f.b - f.w, f.b];
    let third = tol / lit(3.0);
    knots
        .windows(2)
        .map(|k| adaptive_simpson(g, k[0].max(lo), k[1].max(lo), third))
        .fold(T::zero(), |acc, v| acc + v)
}

/// `E[X_t(f)] = ∫ f(u) Φ(-u/(σ√t)) du`.
pub fn limit_expectation<T: Real>(f: &TestFunction<T>, t: T, sigma: T, quad_tol: T) -> T {
    if t <= T::zero() {
        return f.antiderivative(T::zero());
    }
    over_bump(f, T::neg_infinity(), &|u| f.value(u) * limit_one_point(u, t, sigma), quad_tol)
}

/// `E[X_t(f) X_t(g)] = ∬ Φ(-max(u,v)/(σ√t)) f(u) g(v) du dv`, split along
/// `u = v`: the `v < u` part uses the closed-form `G(u) = ∫_{-∞}^u g`, the
/// `v > u` part an inner quadrature.
pub fn limit_second_moment<T: Real>(
    f: &TestFunction<T>,
    g: &TestFunction<T>,
    t: T,
    sigma: T,
    quad_tol: T,
) -> T {
    if t <= T::zero() {
        return f.antiderivative(T::zero()) * g.antiderivative(T::zero());
    }
    let scale = f.l1_norm().max(g.l1_norm()).max(T::one());
    let inner_tol = quad_tol / (lit::<T>(4.0) * scale);
    let phi = |v: T| limit_one_point(v, t, sigma);
    let outer = |u: T| {
        let fu = f.value(u);
        if fu == T::zero() {
            return T::zero();
        }
        let above = over_bump(g, u, &|v| g.value(v) * phi(v), inner_tol);
        fu * (phi(u) * g.antiderivative(u) + above)
    };
    over_bump(f, T::neg_infinity(), &outer, quad_tol / lit(2.0))
}

/// A limit moment with its Monte Carlo half-width (0 when exact).
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LimitMoments {
    pub t_list: Vec<f64>,
    pub f_list: Vec<String>,
    pub value: f64,
    pub halfwidth: f64,
}

/// `σB_t`.
pub fn sample_bm<R: Rng + ?Sized>(sigma: f64, t: f64, rng: &mut R) -> f64 {
    sigma * t.sqrt() * rng.sample::<f64, _>(StandardNormal)
}

/// Endpoints at time 0 of coalescing Brownian motions run backwards.
#[derive(Debug, Clone, PartialEq)]
pub struct BmCoalescence {
    pub endpoints: Vec<f64>,
    /// Cluster of each path, labelled by its smallest member index.
    pub partition: Vec<usize>,
}

/// Euler scheme for backward coalescing Brownian motions from `(u_i, t_i)`.
/// Live clusters take independent `N(0, σ²h)` steps with `h ≤ dt`; two
/// clusters merge when a step makes them touch or swap order, and the
/// merged cluster keeps the position of its lower-index member. A lone
/// cluster is advanced in one exact step.
pub fn sample_coalescing_bm<R: Rng + ?Sized>(
    starts: &[(f64, f64)],
    sigma: f64,
    dt: f64,
    rng: &mut R,
) -> BmCoalescence {
    assert!(dt > 0.0, "dt must be positive");
    let n = starts.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| starts[b].1.total_cmp(&starts[a].1).then(a.cmp(&b)));
    let mut pos: Vec<f64> = starts.iter().map(|s| s.0).collect();
    let mut partition: Vec<usize> = (0..n).collect();
    // Live cluster representatives, kept sorted by position.
    let mut live: Vec<usize> = Vec::new();
    let mut clock = order.first().map_or(0.0, |&i| starts[i].1.max(0.0));
    let mut next = 0;
    while !live.is_empty() || next < n {
        while next < n && starts[order[next]].1 >= clock {
            let i = order[next];
            next += 1;
            match live.iter().find(|&&c| pos[c] == pos[i]) {
                Some(&c) => relabel(&mut partition, c.max(i), c.min(i)),
                None => {
                    let at = live.partition_point(|&c| pos[c] < pos[i]);
                    live.insert(at, i);
                }
            }
            // A joiner with a smaller index takes over as representative.
            for c in live.iter_mut() {
                *c = partition[*c];
            }
        }
        let wake = if next < n { starts[order[next]].1 } else { 0.0 };
        if clock <= wake && next >= n {
            break;
        }
        let h = if live.len() <= 1 {
            clock - wake
        } else {
            dt.min(clock - wake)
        };
        for &c in &live {
            pos[c] += sigma * h.sqrt() * rng.sample::<f64, _>(StandardNormal);
        }
        merge_violators(&mut live, &pos, &mut partition);
        clock = if h >= clock - wake { wake } else { clock - h };
    }
    let endpoints = (0..n).map(|i| pos[partition[i]]).collect();
    BmCoalescence { endpoints, partition }
}

fn relabel(partition: &mut [usize], from: usize, to: usize) {
    for c in partition.iter_mut() {
        if *c == from {
            *c = to;
        }
    }
}

/// Merges neighbours in `live` whose positions are no longer strictly
/// increasing until the order is restored.
fn merge_violators(live: &mut Vec<usize>, pos: &[f64], partition: &mut [usize]) {
    let mut i = 0;
    while i + 1 < live.len() {
        let (a, b) = (live[i], live[i + 1]);
        if pos[a] < pos[b] {
            i += 1;
            continue;
        }
        let (keep, drop) = if a < b { (a, b) } else { (b, a) };
        relabel(partition, drop, keep);
        live[i] = keep;
        live.remove(i + 1);
        // The merged position may now violate the order on the left.
        i = i.saturating_sub(1);
    }
}
