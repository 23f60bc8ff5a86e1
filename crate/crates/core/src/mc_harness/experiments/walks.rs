//! Difference-walk hitting times and the Brownian limit objects.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::*;
use crate::brownian_limit::{
    limit_expectation, limit_one_point, limit_second_moment, sample_bm, sample_coalescing_bm,
};
use crate::dual_walks::{chebyshev_hitting_bound, hitting_prob, hitting_time_sample};
use crate::mc_harness::stats::mean_se;
use crate::mc_harness::{run_replicas, subseed, RefSource};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HittingConfig {
    pub kernel: Option<KernelSpec>,
    /// Paired with `s_list` entry by entry.
    pub z_list: Vec<i64>,
    pub s_list: Vec<f64>,
    pub replicas: usize,
    /// Extra cell computed exactly only; `null` skips it.
    pub exact_z: Option<i64>,
    pub exact_s: f64,
    pub tol: f64,
}

impl Default for HittingConfig {
    fn default() -> Self {
        HittingConfig {
            kernel: None,
            z_list: vec![10, 20, 40],
            s_list: vec![1.0, 4.0, 25.0],
            replicas: 100_000,
            exact_z: Some(5),
            exact_s: 1.0,
            tol: 1e-10,
        }
    }
}

fn bound_for(z: i64, sigma2: f64, s: f64) -> Result<f64, HarnessError> {
    chebyshev_hitting_bound(z, sigma2, s).ok_or_else(|| {
        HarnessError::Config(format!(
            "(z={z}, s={s}) violates |z| > 2σ√s with σ² = {sigma2}"
        ))
    })
}

/// `P_z(τ ≤ s)` for the difference walk against `4σ²s/(|z| - 2σ√s)²`.
pub fn hitting_bound(cfg: &HittingConfig, seed: u64) -> Result<ExperimentReport, HarnessError> {
    let k = require_kernel(&cfg.kernel)?;
    require_mean_zero(&k)?;
    if cfg.z_list.len() != cfg.s_list.len() {
        return Err(HarnessError::Config("`z_list` and `s_list` must have equal length".into()));
    }
    nonempty("z_list", &cfg.z_list)?;
    at_least_one("replicas", cfg.replicas)?;
    positive("tol", cfg.tol)?;
    let sigma2 = k.sigma2();
    let mut cells = Vec::new();
    for (&z, &s) in cfg.z_list.iter().zip(&cfg.s_list) {
        positive("s", s)?;
        cells.push((z, s, bound_for(z, sigma2, s)?));
    }
    let exact_cell = match cfg.exact_z {
        Some(z) => {
            positive("exact_s", cfg.exact_s)?;
            Some((z, bound_for(z, sigma2, cfg.exact_s)?))
        }
        None => None,
    };
    let mut report = ExperimentReport::new("hitting-bound", seed, echo(cfg));

    for (i, &(z, s, bound)) in cells.iter().enumerate() {
        let params = json!({"z": z, "s": s});
        report.reference("bound", params.clone(), bound, RefSource::Bound);
        let runs = run_replicas(cfg.replicas, subseed(seed, i as u64), |_, rng| {
            hitting_time_sample(z, &k, s, rng).map(|h| h.hit)
        });
        abort_note(&mut report, &format!("z={z}"), &runs.aborts);
        let (p, se, n) = proportion(runs.samples.iter().copied());
        report.cell("p_hit", params.clone(), p, se, n);
        if bound >= 1.0 {
            report.info(&format!("bound vacuous z={z} s={s}"), format!("bound {bound:.4} >= 1"));
        } else {
            report.criterion(
                &format!("estimate below bound z={z} s={s}"),
                p <= bound + 3.0 * se,
                format!("{p:.5} <= {bound:.5} + 3*{se:.2e}"),
            );
        }
        let exact = hitting_prob(z, &k, s, cfg.tol).map_err(run_err)?;
        report.reference("p_hit_exact", params, exact.prob, RefSource::Oracle);
        report.info(
            &format!("forward vs exact z={z} s={s}"),
            format!(
                "|{p:.5} - {:.5}| = {:.2e}, 3 SE = {:.2e}",
                exact.prob,
                (p - exact.prob).abs(),
                3.0 * se
            ),
        );
    }
    if let Some((z, bound)) = exact_cell {
        let s = cfg.exact_s;
        let params = json!({"z": z, "s": s});
        let exact = hitting_prob(z, &k, s, cfg.tol).map_err(run_err)?;
        report.reference("p_hit_exact", params.clone(), exact.prob, RefSource::Oracle);
        report.reference("bound", params, bound, RefSource::Bound);
        let upper = exact.prob + exact.error_bound;
        report.criterion(
            &format!("exact value below bound z={z} s={s}"),
            upper <= bound,
            format!("{upper:.6} <= {bound:.4}"),
        );
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitConfig {
    pub pairs: Vec<(f64, f64)>,
    pub f_list: Vec<String>,
    pub t: f64,
    pub sigma: f64,
    /// Euler step as a fraction of `t`.
    pub dt_factor: f64,
    pub replicas: usize,
    /// Allowance for the discretization bias of the Euler scheme.
    pub budget: f64,
    pub quad_tol: f64,
}

impl Default for LimitConfig {
    fn default() -> Self {
        LimitConfig {
            pairs: vec![(0.0, 0.5), (-1.0, 1.0)],
            f_list: vec!["bump(-1,1,0.5)".into()],
            t: 1.0,
            sigma: 1.0,
            dt_factor: 1e-4,
            replicas: 100_000,
            budget: 0.01,
            quad_tol: 1e-9,
        }
    }
}

/// Coalescing Brownian motions against `Φ(-max(u₁,u₂)/(σ√t))`, and the
/// quadrature moments against `F(σB_t)`.
pub fn limit_check(cfg: &LimitConfig, seed: u64) -> Result<ExperimentReport, HarnessError> {
    positive("t", cfg.t)?;
    positive("sigma", cfg.sigma)?;
    positive("dt_factor", cfg.dt_factor)?;
    positive("quad_tol", cfg.quad_tol)?;
    at_least_one("replicas", cfg.replicas)?;
    if !(cfg.budget >= 0.0) {
        return Err(HarnessError::Config("`budget` must be >= 0".into()));
    }
    let fs: Vec<TestFunction> = cfg.f_list.iter().map(|s| test_function(s)).collect::<Result<_, _>>()?;
    let dt = cfg.dt_factor * cfg.t;
    let mut report = ExperimentReport::new("limit-check", seed, echo(cfg));

    for (i, &(u1, u2)) in cfg.pairs.iter().enumerate() {
        let params = json!({"u1": u1, "u2": u2});
        let exact = limit_one_point(u1.max(u2), cfg.t, cfg.sigma);
        report.reference("both_ones", params.clone(), exact, RefSource::ClosedForm);
        let runs = run_replicas(cfg.replicas, subseed(seed, i as u64), |_, rng| {
            let c = sample_coalescing_bm(&[(u1, cfg.t), (u2, cfg.t)], cfg.sigma, dt, rng);
            Ok::<_, String>(c.endpoints.iter().all(|&e| e <= 0.0))
        });
        let (p, se, n) = proportion(runs.samples);
        report.cell("both_ones_bm", params, p, se, n);
        let slack = 3.0 * se + cfg.budget;
        report.criterion(
            &format!("coalescing BM u=({u1},{u2})"),
            (p - exact).abs() <= slack,
            format!("|{p:.5} - {exact:.5}| <= {slack:.4}"),
        );
    }

    let off = cfg.pairs.len() as u64;
    let endpoints = run_replicas(cfg.replicas, subseed(seed, off), |_, rng| {
        Ok::<_, String>(sample_bm(cfg.sigma, cfg.t, rng))
    })
    .samples;
    for f in &fs {
        let params = json!({"f": f.id()});
        let vals: Vec<f64> = endpoints.iter().map(|&b| f.antiderivative(b)).collect();
        let sq: Vec<f64> = vals.iter().map(|v| v * v).collect();
        for (name, xs, q) in [
            ("mean", &vals, limit_expectation(f, cfg.t, cfg.sigma, cfg.quad_tol)),
            ("second_moment", &sq, limit_second_moment(f, f, cfg.t, cfg.sigma, cfg.quad_tol)),
        ] {
            let (m, se) = mean_se(xs);
            report.cell(&format!("{name}_bm"), params.clone(), m, se, xs.len());
            report.reference(&format!("{name}_quadrature"), params.clone(), q, RefSource::Quadrature);
            report.criterion(
                &format!("quadrature {name} vs BM {}", f.id()),
                (m - q).abs() <= 3.0 * se,
                format!("|{m:.5} - {q:.5}| <= 3*{se:.2e}"),
            );
        }
    }
    Ok(report)
}
