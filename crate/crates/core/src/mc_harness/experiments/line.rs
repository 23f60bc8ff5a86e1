//! Experiments on the heavy-side line process.

use rand_distr::{weighted::WeightedAliasIndex, Distribution};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::*;
use crate::brownian_limit::{limit_one_point, limit_second_moment};
use crate::dual_walks::{ctrw_pmf, one_point_prob, sample_coalescing};
use crate::kernel::truncated_pareto_kernel;
use crate::mc_harness::stats::{mean_se, quantile, quantile_se, variance_se, wls_slope};
use crate::mc_harness::{run_replicas, subseed, RefSource};

const QUAD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoremConfig {
    pub kernel: Option<KernelSpec>,
    #[serde(rename = "N")]
    pub n: u32,
    pub t: f64,
    pub u_grid: Vec<f64>,
    pub f: String,
    pub replicas: usize,
    pub dual_replicas: usize,
    /// Allowed gap between the exact one-point value and its limit.
    pub limit_tol: f64,
    /// Allowed gap between the second moment and its limit, before 3·SE.
    pub moment_tol: f64,
    /// Below this `N` the limit comparisons are reported only.
    pub min_limit_n: u32,
    pub tol: f64,
    pub window_cap: u64,
    pub scheduler: Scheduler,
}

impl Default for TheoremConfig {
    fn default() -> Self {
        TheoremConfig {
            kernel: None,
            n: 50,
            t: 1.0,
            u_grid: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            f: "bump(-1,1,0.5)".into(),
            replicas: 10_000,
            dual_replicas: 10_000,
            limit_tol: 0.02,
            moment_tol: 0.03,
            min_limit_n: 10,
            tol: 1e-10,
            window_cap: 1_000_000,
            scheduler: Scheduler::default(),
        }
    }
}

/// One-point law and second moment of `X^N_t(f)` from the heavy-side start:
/// exact dual values, forward simulation, dual two-walker Monte Carlo and
/// the Brownian limit.
pub fn theorem_check(cfg: &TheoremConfig, seed: u64) -> Result<ExperimentReport, HarnessError> {
    let k = require_kernel(&cfg.kernel)?;
    require_mean_zero(&k)?;
    at_least_one("N", cfg.n as usize)?;
    positive("t", cfg.t)?;
    positive("tol", cfg.tol)?;
    nonempty("u_grid", &cfg.u_grid)?;
    at_least_one("replicas", cfg.replicas)?;
    at_least_one("dual_replicas", cfg.dual_replicas)?;
    let f = test_function(&cfg.f)?;
    let n = f64::from(cfg.n);
    let sigma = k.sigma2().sqrt();
    let t_micro = cfg.t * n * n;
    let opts = evolve_options(cfg.scheduler, cfg.window_cap);
    let gate_limit = cfg.n >= cfg.min_limit_n;

    let mut report = ExperimentReport::new("theorem-check", seed, echo(cfg));
    let sites: Vec<i64> = cfg.u_grid.iter().map(|u| (u * n).floor() as i64).collect();

    let fwd = run_replicas(cfg.replicas, subseed(seed, 0), |_, rng| {
        let mut s = init_heavyside();
        s.evolve_with(&k, t_micro, rng, &opts, |_, _| {})?;
        let ones: Vec<bool> = sites.iter().map(|&x| s.opinion(x)).collect();
        Ok::<_, SimError>((ones, evaluate_XN(&s, &f, n)))
    });
    abort_note(&mut report, "forward", &fwd.aborts);
    if fwd.samples.is_empty() {
        return Err(run_err("every forward replica aborted"));
    }

    for (j, (&u, &x)) in cfg.u_grid.iter().zip(&sites).enumerate() {
        let params = json!({"u": u, "x": x});
        let exact = one_point_prob(x, t_micro, &k, cfg.tol).map_err(run_err)?;
        let limit = limit_one_point(u, cfg.t, sigma);
        report.reference("one_point_exact", params.clone(), exact, RefSource::Oracle);
        report.reference("one_point_limit", params.clone(), limit, RefSource::ClosedForm);
        let detail = format!("|exact {exact:.6} - limit {limit:.6}| <= {}", cfg.limit_tol);
        let name = format!("one-point exact vs limit u={u}");
        if gate_limit {
            report.criterion(&name, (exact - limit).abs() <= cfg.limit_tol, detail);
        } else {
            report.info(&name, format!("{detail} (gap {:.4}, N below {})", (exact - limit).abs(), cfg.min_limit_n));
        }
        let (m, se, cnt) = proportion(fwd.samples.iter().map(|s| s.0[j]));
        report.cell("one_point_forward", params, m, se, cnt);
        // A degenerate sample has zero empirical SE; fall back on the
        // Bernoulli SE at the exact value.
        let se_used = se.max((exact * (1.0 - exact) / cnt as f64).sqrt());
        report.criterion(
            &format!("one-point forward vs exact u={u}"),
            (m - exact).abs() <= 3.0 * se_used,
            format!("|{m:.5} - {exact:.5}| <= 3*{se_used:.2e}"),
        );
    }

    let sq: Vec<f64> = fwd.samples.iter().map(|s| s.1 * s.1).collect();
    let (m2, se2) = mean_se(&sq);
    let limit2 = limit_second_moment(&f, &f, cfg.t, sigma, QUAD_TOL);
    let fparams = json!({"f": f.id()});
    report.cell("second_moment_forward", fparams.clone(), m2, se2, sq.len());
    report.reference("second_moment_limit", fparams.clone(), limit2, RefSource::Quadrature);
    let slack = cfg.moment_tol.max(3.0 * se2);
    let detail = format!("|{m2:.5} - {limit2:.5}| <= {slack:.4}");
    if gate_limit {
        report.criterion("second moment forward vs limit", (m2 - limit2).abs() <= slack, detail);
    } else {
        report.info("second moment forward vs limit", detail);
    }

    // Dual estimate: sites drawn ∝ f(x/N), so each sample is
    // (S/N)² 1{both walkers end in the ones}.
    let (lo, hi) = f.site_range(n);
    let weights: Vec<f64> = (lo..=hi).map(|x| f.value(x as f64 / n)).collect();
    let total: f64 = weights.iter().sum();
    let scale = (total / n).powi(2);
    let alias = WeightedAliasIndex::new(weights).map_err(config_err)?;
    let dual = run_replicas(cfg.dual_replicas, subseed(seed, 1), |_, rng| {
        let x = lo + alias.sample(rng) as i64;
        let y = lo + alias.sample(rng) as i64;
        let w = sample_coalescing(&[(x, t_micro), (y, t_micro)], &k, rng);
        let hit = w.positions.iter().all(|&p| p <= 0);
        Ok::<_, String>(if hit { scale } else { 0.0 })
    });
    let (md, sed) = mean_se(&dual.samples);
    report.cell("second_moment_dual", fparams, md, sed, dual.samples.len());
    let joint = (se2 * se2 + sed * sed).sqrt();
    report.criterion(
        "second moment forward vs dual",
        (m2 - md).abs() <= 3.0 * joint,
        format!("|{m2:.5} - {md:.5}| <= 3*{joint:.2e}"),
    );
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AldousConfig {
    pub kernel: Option<KernelSpec>,
    #[serde(rename = "N")]
    pub n: u32,
    pub t0: f64,
    pub delta_list: Vec<f64>,
    pub eps: f64,
    pub f: String,
    pub replicas: usize,
    pub window_cap: u64,
    pub scheduler: Scheduler,
}

impl Default for AldousConfig {
    fn default() -> Self {
        AldousConfig {
            kernel: None,
            n: 50,
            t0: 0.5,
            delta_list: vec![0.0, 0.005, 0.01, 0.02, 0.04],
            eps: 0.05,
            f: "bump(-1,1,0.5)".into(),
            replicas: 2000,
            window_cap: 1_000_000,
            scheduler: Scheduler::default(),
        }
    }
}

/// `P(|X^N_{t0+δ} - X^N_{t0}| > ε)` for deterministic `t0`, with all `δ`
/// read off the same run.
pub fn aldous(cfg: &AldousConfig, seed: u64) -> Result<ExperimentReport, HarnessError> {
    let k = require_kernel(&cfg.kernel)?;
    at_least_one("N", cfg.n as usize)?;
    at_least_one("replicas", cfg.replicas)?;
    positive("eps", cfg.eps)?;
    if !(cfg.t0 >= 0.0) {
        return Err(HarnessError::Config("`t0` must be >= 0".into()));
    }
    let deltas = time_grid("delta_list", &cfg.delta_list)?;
    let f = test_function(&cfg.f)?;
    let n = f64::from(cfg.n);
    let opts = evolve_options(cfg.scheduler, cfg.window_cap);
    let mut times = vec![cfg.t0 * n * n];
    times.extend(deltas.iter().map(|d| (cfg.t0 + d) * n * n));

    let mut report = ExperimentReport::new("aldous-check", seed, echo(cfg));
    report.note("deterministic stopping times only: a necessary-condition check");
    let runs = run_replicas(cfg.replicas, seed, |_, rng| {
        let path = heavyside_path(&k, &f, n, &times, &opts, rng)?;
        Ok::<_, SimError>(path[1..].iter().map(|x| x - path[0]).collect::<Vec<f64>>())
    });
    abort_note(&mut report, "replicas", &runs.aborts);
    if runs.samples.is_empty() {
        return Err(run_err("every replica aborted"));
    }
    let big: Vec<Vec<f64>> = (0..deltas.len())
        .map(|j| {
            runs.samples
                .iter()
                .map(|inc| if inc[j].abs() > cfg.eps { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let mut probs = Vec::new();
    for (j, &d) in deltas.iter().enumerate() {
        let params = json!({"delta": d});
        let incs: Vec<f64> = runs.samples.iter().map(|inc| inc[j]).collect();
        let (p, se) = mean_se(&big[j]);
        let (m, mse) = mean_se(&incs);
        let cnt = incs.len();
        report.cell("p_exceed", params.clone(), p, se, cnt);
        report.cell("mean_increment", params.clone(), m, mse, cnt);
        let v = if cnt >= 4 { variance_se(&incs) } else { (0.0, 0.0) };
        report.cell("var_increment", params.clone(), v.0, v.1, cnt);
        let bound = 2.0 * (m * m + v.0) / (cfg.eps * cfg.eps);
        report.reference("chebyshev_bound", params, bound, RefSource::Bound);
        report.criterion(
            &format!("estimate below Chebyshev bound delta={d}"),
            p <= bound + 3.0 * se,
            format!("{p:.5} <= {bound:.5} + 3*{se:.2e}"),
        );
        if d == 0.0 {
            report.criterion("delta=0 gives probability 0", p == 0.0, format!("estimate {p}"));
        }
        probs.push(p);
    }
    for j in 1..deltas.len() {
        let diff: Vec<f64> = big[j - 1].iter().zip(&big[j]).map(|(a, b)| a - b).collect();
        let (dm, dse) = mean_se(&diff);
        report.criterion(
            &format!("monotone in delta {} -> {}", deltas[j - 1], deltas[j]),
            dm <= 2.0 * dse,
            format!("p({}) - p({}) = {dm:.5} <= 2*{dse:.2e}", deltas[j - 1], deltas[j]),
        );
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VarianceConfig {
    pub kernel: Option<KernelSpec>,
    #[serde(rename = "N")]
    pub n: u32,
    pub delta_list: Vec<f64>,
    pub f: String,
    pub replicas: usize,
    pub window_cap: u64,
    pub scheduler: Scheduler,
}

impl Default for VarianceConfig {
    fn default() -> Self {
        VarianceConfig {
            kernel: None,
            n: 100,
            delta_list: vec![0.04, 0.08, 0.16, 0.32],
            f: "bump(-1,1,0.5)".into(),
            replicas: 10_000,
            window_cap: 1_000_000,
            scheduler: Scheduler::default(),
        }
    }
}

/// `Var(X^N_δ)` from the heavy-side start: log-log slope and the fitted
/// `C₁δ^{1/4} + C₂δ^{1/2}` envelope. Each `δ` uses its own replicas.
pub fn variance_scaling(cfg: &VarianceConfig, seed: u64) -> Result<ExperimentReport, HarnessError> {
    let k = require_kernel(&cfg.kernel)?;
    at_least_one("N", cfg.n as usize)?;
    if cfg.replicas < 4 {
        return Err(HarnessError::Config("`replicas` must be at least 4".into()));
    }
    let deltas = time_grid("delta_list", &cfg.delta_list)?;
    if deltas.iter().any(|&d| d <= 0.0) || deltas.len() < 2 {
        return Err(HarnessError::Config("`delta_list` needs at least two positive entries".into()));
    }
    let f = test_function(&cfg.f)?;
    let n = f64::from(cfg.n);
    let opts = evolve_options(cfg.scheduler, cfg.window_cap);
    let mut report = ExperimentReport::new("variance-scaling", seed, echo(cfg));

    let ceiling = (f.riemann_sum(n) * f.sup_norm()).powi(2) / 4.0;
    report.reference("boundedness_ceiling", json!({}), ceiling, RefSource::Bound);
    let mut vars = Vec::new();
    for (j, &d) in deltas.iter().enumerate() {
        let runs = run_replicas(cfg.replicas, subseed(seed, j as u64), |_, rng| {
            heavyside_path(&k, &f, n, &[d * n * n], &opts, rng).map(|p| p[0])
        });
        abort_note(&mut report, &format!("delta={d}"), &runs.aborts);
        if runs.samples.len() < 4 {
            return Err(run_err(format!("too few replicas survived at delta={d}")));
        }
        let (v, se) = variance_se(&runs.samples);
        report.cell("var_X", json!({"delta": d}), v, se, runs.samples.len());
        vars.push((d, v, se));
    }
    if vars.iter().any(|&(_, v, se)| !(v > 0.0) || !(se > 0.0)) {
        report.criterion("variance positive at every delta", false, "a cell has zero variance");
        return Ok(report);
    }
    let x: Vec<f64> = vars.iter().map(|c| c.0.ln()).collect();
    let y: Vec<f64> = vars.iter().map(|c| c.1.ln()).collect();
    let w: Vec<f64> = vars.iter().map(|c| (c.1 / c.2).powi(2)).collect();
    let (slope, slope_se, _) = wls_slope(&x, &y, &w);
    report.cell("loglog_slope", json!({}), slope, slope_se, vars.len());
    report.criterion(
        "log-log slope >= 1/4 - 3 SE",
        slope >= 0.25 - 3.0 * slope_se,
        format!("slope {slope:.4} (se {slope_se:.4})"),
    );
    let &(dmax, vmax, _) = vars.last().expect("nonempty");
    let c1 = vmax / (2.0 * dmax.powf(0.25));
    let c2 = vmax / (2.0 * dmax.sqrt());
    report.reference("envelope_C1", json!({}), c1, RefSource::Bound);
    report.reference("envelope_C2", json!({}), c2, RefSource::Bound);
    for &(d, v, se) in &vars {
        let env = c1 * d.powf(0.25) + c2 * d.sqrt();
        report.criterion(
            &format!("envelope dominates delta={d}"),
            v <= env + 3.0 * se,
            format!("{v:.3e} <= {env:.3e} + 3*{se:.1e}"),
        );
    }
    report.criterion(
        "variances below boundedness ceiling",
        vars.iter().all(|c| c.1 <= ceiling),
        format!("ceiling {ceiling:.4}"),
    );
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftConfig {
    pub kernel: Option<KernelSpec>,
    #[serde(rename = "N")]
    pub n: u32,
    pub delta_list: Vec<f64>,
    pub f: String,
    pub replicas: usize,
    pub tol: f64,
    pub window_cap: u64,
    pub scheduler: Scheduler,
}

impl Default for DriftConfig {
    fn default() -> Self {
        DriftConfig {
            kernel: None,
            n: 50,
            delta_list: vec![0.005, 0.01, 0.02],
            f: "bump(-1,1,0.5)".into(),
            replicas: 20_000,
            tol: 1e-10,
            window_cap: 1_000_000,
            scheduler: Scheduler::default(),
        }
    }
}

/// `E[X^N_δ - X^N_0]` from the heavy-side start, against the exact value
/// from the dual walk law. Each `δ` uses its own replicas.
pub fn drift(cfg: &DriftConfig, seed: u64) -> Result<ExperimentReport, HarnessError> {
    let k = require_kernel(&cfg.kernel)?;
    require_mean_zero(&k)?;
    at_least_one("N", cfg.n as usize)?;
    if cfg.replicas < 2 {
        return Err(HarnessError::Config("`replicas` must be at least 2".into()));
    }
    positive("tol", cfg.tol)?;
    let deltas = time_grid("delta_list", &cfg.delta_list)?;
    let f = test_function(&cfg.f)?;
    let n = f64::from(cfg.n);
    let opts = evolve_options(cfg.scheduler, cfg.window_cap);
    let symmetric = k.is_symmetric() && (f.a + f.b).abs() < 1e-12;
    let x0 = f.antiderivative(0.0);
    let (lo, hi) = f.site_range(n);
    let x0_discrete: f64 = (lo..=hi.min(0)).map(|x| f.value(x as f64 / n)).sum::<f64>() / n;
    let mut report = ExperimentReport::new("drift-check", seed, echo(cfg));
    report.note(format!("X_0 = {x0_discrete:.6} (limit {x0:.6})"));

    let mut cells = Vec::new();
    for (j, &d) in deltas.iter().enumerate() {
        let params = json!({"delta": d});
        let tm = d * n * n;
        let pmf = ctrw_pmf(&k, 1.0, tm, cfg.tol).map_err(run_err)?;
        let exact_mean: f64 = (lo..=hi).map(|x| f.value(x as f64 / n) * pmf.cdf(-x)).sum::<f64>() / n;
        let exact = exact_mean - x0_discrete;
        report.reference("drift_exact", params.clone(), exact, RefSource::Oracle);
        let runs = run_replicas(cfg.replicas, subseed(seed, j as u64), |_, rng| {
            heavyside_path(&k, &f, n, &[tm], &opts, rng).map(|p| p[0] - x0_discrete)
        });
        abort_note(&mut report, &format!("delta={d}"), &runs.aborts);
        if runs.samples.len() < 2 {
            return Err(run_err(format!("too few replicas survived at delta={d}")));
        }
        let (m, se) = mean_se(&runs.samples);
        report.cell("mean_increment", params, m, se, runs.samples.len());
        if d == 0.0 {
            report.criterion("delta=0 gives increment 0", m == 0.0, format!("mean {m}"));
        }
        report.criterion(
            &format!("forward vs exact drift delta={d}"),
            (m - exact).abs() <= 3.0 * se.max(f64::EPSILON),
            format!("|{m:.3e} - {exact:.3e}| <= 3*{se:.1e}"),
        );
        cells.push((d, m, se));
    }

    let &(dmax, mmax, _) = cells.last().expect("nonempty grid");
    if dmax > 0.0 {
        let c = mmax.abs() / dmax;
        report.reference("linear_constant", json!({}), c, RefSource::Bound);
        for &(d, m, se) in &cells {
            report.criterion(
                &format!("linear envelope delta={d}"),
                m.abs() <= c * d + 3.0 * se,
                format!("|{m:.3e}| <= {c:.4}*{d} + 3*{se:.1e}"),
            );
        }
    }
    if symmetric {
        for &(d, m, se) in &cells {
            report.criterion(
                &format!("zero drift by symmetry delta={d}"),
                m.abs() <= 3.0 * se,
                format!("|{m:.3e}| <= 3*{se:.1e}"),
            );
        }
    } else {
        for w in cells.windows(2) {
            let ((d1, m1, s1), (d2, m2, s2)) = (w[0], w[1]);
            if d1 <= 0.0 {
                continue;
            }
            let r = d2 / d1;
            let gap = (m1.abs() - m2.abs() / r).abs();
            let slack = 3.0 * (s1 * s1 + (s2 / r).powi(2)).sqrt();
            report.criterion(
                &format!("drift scales linearly {d1} -> {d2}"),
                gap <= slack,
                format!("||m({d1})| - |m({d2})|/{r}| = {gap:.2e} <= {slack:.2e}"),
            );
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WidthConfig {
    pub kernel: Option<KernelSpec>,
    /// Microscopic times.
    pub t_grid: Vec<f64>,
    pub replicas: usize,
    pub max_variation: f64,
    /// Reported only; `null` skips it.
    pub contrast_kernel: Option<KernelSpec>,
    pub contrast_replicas: usize,
    pub window_cap: u64,
    pub scheduler: Scheduler,
}

impl Default for WidthConfig {
    fn default() -> Self {
        WidthConfig {
            kernel: None,
            t_grid: vec![250.0, 1000.0, 4000.0],
            replicas: 10_000,
            max_variation: 0.5,
            contrast_kernel: Some(KernelSpec::Pareto {
                gamma: 1.5,
                cutoff: 100,
            }),
            contrast_replicas: 300,
            window_cap: 1_000_000,
            scheduler: Scheduler::default(),
        }
    }
}

const WIDTH_QUANTILES: [(f64, &str); 3] = [(0.5, "q50"), (0.9, "q90"), (0.99, "q99")];

fn width_runs(
    k: &Kernel,
    grid: &[f64],
    replicas: usize,
    seed: u64,
    opts: &EvolveOptions,
    report: &mut ExperimentReport,
    label: &str,
) -> Result<Vec<f64>, HarnessError> {
    let runs = run_replicas(replicas, seed, |_, rng| {
        let mut s = init_heavyside();
        let mut out = Vec::with_capacity(grid.len());
        for &t in grid {
            s.evolve_with(k, t, rng, opts, |_, _| {})?;
            out.push(s.line().expect("line mode").width() as f64);
        }
        Ok::<_, SimError>(out)
    });
    abort_note(report, label, &runs.aborts);
    if runs.samples.is_empty() {
        return Err(run_err(format!("{label}: every replica aborted")));
    }
    let mut q99 = Vec::new();
    for (j, &t) in grid.iter().enumerate() {
        let w: Vec<f64> = runs.samples.iter().map(|r| r[j]).collect();
        for (q, name) in WIDTH_QUANTILES {
            let params = json!({"kernel": label, "t": t});
            report.cell(&format!("width_{name}"), params, quantile(&w, q), quantile_se(&w, q), w.len());
        }
        q99.push(quantile(&w, 0.99));
    }
    Ok(q99)
}

/// Quantiles of `r_t - l_t` from the heavy-side start.
pub fn width_tightness(cfg: &WidthConfig, seed: u64) -> Result<ExperimentReport, HarnessError> {
    let k = require_kernel(&cfg.kernel)?;
    require_mean_zero(&k)?;
    at_least_one("replicas", cfg.replicas)?;
    let grid = time_grid("t_grid", &cfg.t_grid)?;
    let opts = evolve_options(cfg.scheduler, cfg.window_cap);
    let mut report = ExperimentReport::new("width-tightness", seed, echo(cfg));
    let label = cfg.kernel.as_ref().expect("checked").to_string();
    let q99 = width_runs(&k, &grid, cfg.replicas, subseed(seed, 0), &opts, &mut report, &label)?;
    if grid[0] == 0.0 {
        let c = report
            .find_cell("width_q99", &json!({"kernel": label, "t": 0.0}))
            .map(|c| c.estimate);
        report.criterion("width at t=0 is -1", c == Some(-1.0), format!("q99 {c:?}"));
    }
    let pos: Vec<f64> = grid.iter().zip(&q99).filter(|(t, _)| **t > 0.0).map(|(_, q)| *q).collect();
    if !pos.is_empty() {
        let hi = pos.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = pos.iter().copied().fold(f64::INFINITY, f64::min);
        let var = (hi - lo) / hi.abs().max(lo.abs()).max(1.0);
        report.cell("q99_variation", json!({"kernel": label}), var, 0.0, pos.len());
        report.criterion(
            "q99 variation over t_grid",
            var <= cfg.max_variation,
            format!("(max {hi} - min {lo}) / scale = {var:.3} <= {}", cfg.max_variation),
        );
    }
    if let Some(spec) = &cfg.contrast_kernel {
        let ck = spec.build().map_err(config_err)?;
        let cq = width_runs(&ck, &grid, cfg.contrast_replicas.max(1), subseed(seed, 1), &opts, &mut report, &spec.to_string())?;
        let increasing = cq.windows(2).all(|w| w[1] > w[0]);
        report.info(
            "contrast q99 across t_grid",
            format!("{spec}: {cq:?}, increasing: {increasing}"),
        );
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathBreakConfig {
    /// Tail exponent of the heavy kernel, in `(2, 3)`.
    pub heavy_gamma: f64,
    /// Heavy cutoff is `heavy_cutoff_factor · N`.
    pub heavy_cutoff_factor: u32,
    pub light_kernel: KernelSpec,
    #[serde(rename = "N_list")]
    pub n_list: Vec<u32>,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub eps: f64,
    pub f: String,
    pub replicas: usize,
    pub ratio: f64,
    pub q90_tol: f64,
    pub window_cap: u64,
    pub scheduler: Scheduler,
}

impl Default for PathBreakConfig {
    fn default() -> Self {
        PathBreakConfig {
            heavy_gamma: 2.5,
            heavy_cutoff_factor: 10,
            light_kernel: KernelSpec::NearestNeighbor,
            n_list: vec![25, 50, 100],
            t_end: 1.0,
            eps: 0.2,
            f: "bump(-1,1,0.5)".into(),
            replicas: 2000,
            ratio: 3.0,
            q90_tol: 0.05,
            window_cap: 1_000_000,
            scheduler: Scheduler::default(),
        }
    }
}

/// Sup of the width and max unit-time increment of `X^N(f)` over one run.
fn path_extremes<R: rand::Rng + ?Sized>(
    k: &Kernel,
    f: &TestFunction,
    n: f64,
    t_end: f64,
    opts: &EvolveOptions,
    rng: &mut R,
) -> Result<(f64, f64), SimError> {
    let mut s = init_heavyside();
    let mut x = evaluate_XN(&s, f, n);
    let mut bin = 0.0;
    let mut at_bin = x;
    let mut max_inc = 0.0f64;
    let mut max_width = -1i64;
    s.evolve_with(k, t_end, rng, opts, |e, cfg| {
        let b = e.time.floor();
        if b > bin {
            max_inc = max_inc.max((x - at_bin).abs());
            at_bin = x;
            bin = b;
        }
        let v = f.value(e.site as f64 / n) / n;
        x += if e.opinion { v } else { -v };
        if let ConfigRef::Line(c) = cfg {
            max_width = max_width.max(c.width());
        }
    })?;
    max_inc = max_inc.max((x - at_bin).abs());
    Ok((max_width as f64, max_inc))
}

/// Interface sup-width exceedances and `X^N(f)` increments, heavy-tailed
/// against light kernel.
pub fn path_break(cfg: &PathBreakConfig, seed: u64) -> Result<ExperimentReport, HarnessError> {
    if !(cfg.heavy_gamma > 2.0 && cfg.heavy_gamma < 3.0) {
        return Err(HarnessError::Config(format!(
            "`heavy_gamma` must lie in (2, 3), got {}",
            cfg.heavy_gamma
        )));
    }
    at_least_one("heavy_cutoff_factor", cfg.heavy_cutoff_factor as usize)?;
    nonempty("N_list", &cfg.n_list)?;
    positive("T", cfg.t_end)?;
    positive("eps", cfg.eps)?;
    at_least_one("replicas", cfg.replicas)?;
    for &n in &cfg.n_list {
        if cfg.eps * f64::from(n) < 1.0 {
            return Err(HarnessError::Config(format!(
                "eps*N = {} < 1 at N={n}: degenerate cell",
                cfg.eps * f64::from(n)
            )));
        }
    }
    let light = cfg.light_kernel.build().map_err(config_err)?;
    let f = test_function(&cfg.f)?;
    let opts = evolve_options(cfg.scheduler, cfg.window_cap);
    let mut report = ExperimentReport::new("path-break", seed, echo(cfg));
    let mut n_list = cfg.n_list.clone();
    n_list.sort_unstable();
    n_list.dedup();
    let mut last = None;
    for (i, &nn) in n_list.iter().enumerate() {
        let n = f64::from(nn);
        let spec = KernelSpec::Pareto {
            gamma: cfg.heavy_gamma,
            cutoff: cfg.heavy_cutoff_factor * nn,
        };
        let heavy = truncated_pareto_kernel(cfg.heavy_gamma, cfg.heavy_cutoff_factor * nn).map_err(config_err)?;
        let mut row = Vec::new();
        for (j, (label, k)) in [("heavy", &heavy), ("light", &light)].into_iter().enumerate() {
            let runs = run_replicas(cfg.replicas, subseed(seed, (2 * i + j) as u64), |_, rng| {
                path_extremes(k, &f, n, cfg.t_end * n * n, &opts, rng)
            });
            abort_note(&mut report, &format!("{label} N={nn}"), &runs.aborts);
            if runs.samples.is_empty() {
                return Err(run_err(format!("{label} N={nn}: every replica aborted")));
            }
            let kname = if j == 0 { spec.to_string() } else { cfg.light_kernel.to_string() };
            let params = json!({"N": nn, "kernel": kname});
            let (p, se, cnt) = proportion(runs.samples.iter().map(|s| s.0 > cfg.eps * n));
            report.cell("p_sup_width_exceeds", params.clone(), p, se, cnt);
            let inc: Vec<f64> = runs.samples.iter().map(|s| s.1).collect();
            let q = quantile(&inc, 0.9);
            report.cell("q90_max_increment", params, q, quantile_se(&inc, 0.9), cnt);
            row.push((p, q));
        }
        report.info(
            &format!("N={nn}"),
            format!("p heavy {:.4} light {:.4}; q90 heavy {:.4} light {:.4}", row[0].0, row[1].0, row[0].1, row[1].1),
        );
        last = Some((nn, row));
    }
    let (nn, row) = last.expect("nonempty N_list");
    let ((ph, qh), (pl, ql)) = (row[0], row[1]);
    report.criterion(
        &format!("heavy exceedance >= {}x light at N={nn}", cfg.ratio),
        ph > 0.0 && ph >= cfg.ratio * pl,
        format!("{ph:.4} vs {pl:.4}"),
    );
    report.criterion(
        &format!("q90 of max X increment agrees at N={nn}"),
        (qh - ql).abs() <= cfg.q90_tol,
        format!("|{qh:.4} - {ql:.4}| <= {}", cfg.q90_tol),
    );
    Ok(report)
}
