//! Experiments on the torus, where exact laws are available.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::*;
use crate::exact_oracle::{dual_marginal, marginalize, transient_dist, MAX_TORUS_LEN};
use crate::mc_harness::stats::{histogram, mean_se, total_variation};
use crate::mc_harness::{run_replicas, subseed, RefSource};
use crate::observables::segregation_energy;
use crate::voter_sim::init_torus;

/// `half` (ones on sites `1..=L/2`), `ones`, `zeros`, or a 0/1 string
/// listing sites `0..L`.
pub(super) fn torus_init(spec: &str, len: usize) -> Result<Vec<bool>, HarnessError> {
    match spec {
        "half" => Ok((0..len).map(|i| i >= 1 && i <= len / 2).collect()),
        "ones" => Ok(vec![true; len]),
        "zeros" => Ok(vec![false; len]),
        bits => {
            if bits.len() != len || !bits.chars().all(|c| c == '0' || c == '1') {
                return Err(HarnessError::Config(format!(
                    "`init` must be half, ones, zeros or a 0/1 string of length L={len}, got `{bits}`"
                )));
            }
            Ok(bits.chars().map(|c| c == '1').collect())
        }
    }
}

fn bit_string(idx: usize, len: usize) -> String {
    (0..len).map(|i| if idx >> i & 1 == 1 { '1' } else { '0' }).collect()
}

fn torus_len(l: usize) -> Result<(), HarnessError> {
    if l < 2 {
        return Err(HarnessError::Config("`L` must be at least 2".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleCheckConfig {
    pub kernel: Option<KernelSpec>,
    #[serde(rename = "L")]
    pub len: usize,
    pub init: String,
    /// Microscopic time.
    pub t: f64,
    pub replicas: usize,
    pub tv_tol: f64,
    pub tol: f64,
}

impl Default for OracleCheckConfig {
    fn default() -> Self {
        OracleCheckConfig {
            kernel: Some(KernelSpec::NearestNeighbor),
            len: 6,
            init: "110100".into(),
            t: 1.0,
            replicas: 100_000,
            tv_tol: 0.01,
            tol: 1e-10,
        }
    }
}

/// Simulator against the exact transient law, and the dual walker marginals
/// against its site marginals.
pub fn oracle_check(cfg: &OracleCheckConfig, seed: u64) -> Result<ExperimentReport, HarnessError> {
    let mut cfg = cfg.clone();
    cfg.kernel.get_or_insert(KernelSpec::NearestNeighbor);
    let k = require_kernel(&cfg.kernel)?;
    let len = cfg.len;
    torus_len(len)?;
    if len > MAX_TORUS_LEN {
        return Err(HarnessError::Config(format!("`L` must be at most {MAX_TORUS_LEN}")));
    }
    at_least_one("replicas", cfg.replicas)?;
    positive("tol", cfg.tol)?;
    if !(cfg.t >= 0.0) {
        return Err(HarnessError::Config("`t` must be >= 0".into()));
    }
    let init = torus_init(&cfg.init, len)?;
    let mut report = ExperimentReport::new("oracle-check", seed, echo(&cfg));

    let exact = transient_dist(len, &k, &init, cfg.t, cfg.tol).map_err(run_err)?;
    let start = init_torus(len, &init).map_err(config_err)?;
    let runs = run_replicas(cfg.replicas, subseed(seed, 0), |_, rng| {
        let mut s = start.clone();
        s.evolve_to(&k, cfg.t, rng)?;
        Ok::<_, SimError>(s.torus().expect("torus mode").index())
    });
    abort_note(&mut report, "forward", &runs.aborts);
    let cnt = runs.samples.len();
    let emp = histogram(runs.samples.iter().copied(), 1 << len);
    let tv = total_variation(&emp, &exact.probs);
    report.cell("total_variation", json!({}), tv, 0.0, cnt);
    report.criterion(
        "forward law vs exact transient law",
        tv <= cfg.tv_tol,
        format!("TV {tv:.5} <= {}", cfg.tv_tol),
    );
    // E[TV] ≈ ∑ √(p(1-p)/(2πn)) for multinomial noise alone.
    let noise: f64 = exact
        .probs
        .iter()
        .map(|p| (p * (1.0 - p) / (2.0 * std::f64::consts::PI * cnt as f64)).sqrt())
        .sum();
    report.info("sampling-noise TV level", format!("{noise:.5}"));

    let mut order: Vec<usize> = (0..exact.probs.len()).collect();
    order.sort_by(|&a, &b| exact.probs[b].total_cmp(&exact.probs[a]).then(a.cmp(&b)));
    let shown = if len <= 4 { order.len() } else { 8 };
    for &i in order.iter().take(shown) {
        let params = json!({"config": bit_string(i, len)});
        let p = exact.probs[i];
        let se = (emp[i] * (1.0 - emp[i]) / cnt as f64).sqrt();
        report.cell("config_prob", params.clone(), emp[i], se, cnt);
        report.reference("config_prob_exact", params, p, RefSource::Oracle);
    }

    let mut worst: f64 = 0.0;
    let mut sets: Vec<Vec<usize>> = (0..len).map(|x| vec![x]).collect();
    for x in 0..len {
        for y in x + 1..len {
            sets.push(vec![x, y]);
        }
    }
    for sites in &sets {
        let dual = dual_marginal(len, &k, sites, &init, cfg.t, cfg.tol).map_err(run_err)?;
        let fwd = marginalize(&exact, sites);
        let gap = dual.probs.iter().zip(&fwd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(gap);
        if sites.len() == 1 {
            let x = sites[0];
            let ones: Vec<bool> = runs.samples.iter().map(|&c| c >> x & 1 == 1).collect();
            let (m, se, n) = proportion(ones);
            report.cell("site_density", json!({"x": x}), m, se, n);
            report.reference("site_density_dual", json!({"x": x}), dual.probs[1], RefSource::Oracle);
        }
    }
    report.cell("dual_max_gap", json!({"sets": sets.len()}), worst, 0.0, sets.len());
    report.criterion(
        "dual marginals vs exact marginals (all sites and pairs)",
        worst <= 2.0 * cfg.tol,
        format!("max gap {worst:.2e} <= {:.1e}", 2.0 * cfg.tol),
    );
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MartingaleConfig {
    pub kernel: Option<KernelSpec>,
    #[serde(rename = "L")]
    pub len: usize,
    /// Scaling for macroscopic times; defaults to `L/2`.
    #[serde(rename = "N")]
    pub n: Option<u32>,
    pub init: String,
    /// Macroscopic times; the run is observed at `tN²`.
    pub t_grid: Vec<f64>,
    pub replicas: usize,
    /// Small torus checked against the exact law, at microscopic times
    /// `t_grid`. Zero skips it.
    pub oracle_len: usize,
    pub oracle_init: String,
    pub tol: f64,
}

impl Default for MartingaleConfig {
    fn default() -> Self {
        MartingaleConfig {
            kernel: Some(KernelSpec::NearestNeighbor),
            len: 100,
            n: None,
            init: "half".into(),
            t_grid: vec![0.5, 1.0, 2.0],
            replicas: 10_000,
            oracle_len: 6,
            oracle_init: "110100".into(),
            tol: 1e-10,
        }
    }
}

fn density_path(
    start: &VoterState,
    k: &Kernel,
    times: &[f64],
    replicas: usize,
    seed: u64,
    report: &mut ExperimentReport,
    label: &str,
) -> Result<Vec<Vec<(f64, f64)>>, HarnessError> {
    let runs = run_replicas(replicas, seed, |_, rng| {
        let mut s = start.clone();
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            s.evolve_to(k, t, rng)?;
            out.push((s.torus().expect("torus mode").density(), segregation_energy(&s, k)));
        }
        Ok::<_, SimError>(out)
    });
    abort_note(report, label, &runs.aborts);
    if runs.samples.len() < 2 {
        return Err(run_err(format!("{label}: too few replicas survived")));
    }
    Ok(runs.samples)
}

/// Density on the torus is a martingale; its mean must stay at the initial
/// density. Also reports the segregation coefficient along the run.
pub fn martingale(cfg: &MartingaleConfig, seed: u64) -> Result<ExperimentReport, HarnessError> {
    let mut cfg = cfg.clone();
    cfg.kernel.get_or_insert(KernelSpec::NearestNeighbor);
    let k = require_kernel(&cfg.kernel)?;
    torus_len(cfg.len)?;
    let n_scale = cfg.n.unwrap_or((cfg.len / 2) as u32);
    cfg.n = Some(n_scale);
    at_least_one("N", n_scale as usize)?;
    if cfg.replicas < 2 {
        return Err(HarnessError::Config("`replicas` must be at least 2".into()));
    }
    positive("tol", cfg.tol)?;
    let grid = time_grid("t_grid", &cfg.t_grid)?;
    let init = torus_init(&cfg.init, cfg.len)?;
    if cfg.oracle_len > MAX_TORUS_LEN {
        return Err(HarnessError::Config(format!("`oracle_len` must be at most {MAX_TORUS_LEN}")));
    }
    let oracle_init = if cfg.oracle_len > 0 {
        torus_init(&cfg.oracle_init, cfg.oracle_len)?
    } else {
        Vec::new()
    };
    let mut report = ExperimentReport::new("martingale", seed, echo(&cfg));

    let n = f64::from(n_scale);
    let d0 = init.iter().filter(|&&b| b).count() as f64 / cfg.len as f64;
    let start = init_torus(cfg.len, &init).map_err(config_err)?;
    report.reference("initial_density", json!({}), d0, RefSource::ClosedForm);
    let micro: Vec<f64> = grid.iter().map(|t| t * n * n).collect();
    let paths = density_path(&start, &k, &micro, cfg.replicas, subseed(seed, 0), &mut report, "torus")?;
    for (j, &t) in grid.iter().enumerate() {
        let params = json!({"t": t, "L": cfg.len});
        let dens: Vec<f64> = paths.iter().map(|p| p[j].0).collect();
        let beta: Vec<f64> = paths.iter().map(|p| p[j].1).collect();
        let (m, se) = mean_se(&dens);
        let (b, bse) = mean_se(&beta);
        let (c, cse, cnt) = proportion(dens.iter().map(|&d| d == 0.0 || d == 1.0));
        report.cell("mean_density", params.clone(), m, se, dens.len());
        report.cell("mean_beta", params.clone(), b, bse, beta.len());
        report.cell("consensus_fraction", params, c, cse, cnt);
        report.criterion(
            &format!("mean density at t={t}"),
            (m - d0).abs() <= 3.0 * se + 1e-12,
            format!("|{m:.5} - {d0}| <= 3*{se:.2e}"),
        );
    }

    if cfg.oracle_len > 0 {
        let len = cfg.oracle_len;
        let small = init_torus(len, &oracle_init).map_err(config_err)?;
        let sd0 = oracle_init.iter().filter(|&&b| b).count() as f64 / len as f64;
        let paths = density_path(&small, &k, &grid, cfg.replicas, subseed(seed, 1), &mut report, "oracle torus")?;
        for (j, &t) in grid.iter().enumerate() {
            let params = json!({"t": t, "L": len});
            let exact = transient_dist(len, &k, &oracle_init, t, cfg.tol).map_err(run_err)?;
            let ed: f64 = exact
                .probs
                .iter()
                .enumerate()
                .map(|(i, p)| p * i.count_ones() as f64 / len as f64)
                .sum();
            report.reference("mean_density_exact", params.clone(), ed, RefSource::Oracle);
            let dens: Vec<f64> = paths.iter().map(|p| p[j].0).collect();
            let (m, se) = mean_se(&dens);
            report.cell("mean_density", params, m, se, dens.len());
            let slack = 2.0 * cfg.tol + 3.0 * se;
            report.criterion(
                &format!("L={len} mean density vs oracle t={t}"),
                (m - ed).abs() <= slack,
                format!("|{m:.5} - {ed:.8}| <= {slack:.2e}"),
            );
            report.criterion(
                &format!("L={len} oracle density conserved t={t}"),
                (ed - sd0).abs() <= 2.0 * cfg.tol,
                format!("|{ed:.12} - {sd0}|"),
            );
        }
    }
    Ok(report)
}
