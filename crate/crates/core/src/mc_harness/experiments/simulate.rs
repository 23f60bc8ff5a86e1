//! Plain forward runs with per-time snapshots.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::torus::torus_init;
use super::*;
use crate::mc_harness::run_replicas;
use crate::mc_harness::stats::mean_se;
use crate::observables::MeasureSnapshot;
use crate::voter_sim::{init_torus, Mode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub mode: Mode,
    pub kernel: Option<KernelSpec>,
    #[serde(rename = "N")]
    pub n: u32,
    /// Macroscopic times; snapshots are taken at `tN²`.
    pub t_grid: Vec<f64>,
    /// Torus length; ignored on the line.
    #[serde(rename = "L")]
    pub len: usize,
    /// Torus initial state; the line always starts heavy-side.
    pub init: String,
    pub f_list: Vec<String>,
    pub replicas: usize,
    pub window_cap: u64,
    pub scheduler: Scheduler,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            mode: Mode::Line,
            kernel: None,
            n: 50,
            t_grid: vec![0.0, 0.25, 0.5, 1.0],
            len: 100,
            init: "half".into(),
            f_list: vec!["bump(-1,1,0.5)".into()],
            replicas: 1,
            window_cap: 1_000_000,
            scheduler: Scheduler::default(),
        }
    }
}

/// Runs `replicas` copies and snapshots each at every grid time. Replica 0's
/// snapshots go to the report's CSV.
pub fn simulate(cfg: &SimulateConfig, seed: u64) -> Result<ExperimentReport, HarnessError> {
    let k = require_kernel(&cfg.kernel)?;
    at_least_one("N", cfg.n as usize)?;
    at_least_one("replicas", cfg.replicas)?;
    let grid = time_grid("t_grid", &cfg.t_grid)?;
    let fs: Vec<TestFunction> = cfg.f_list.iter().map(|s| test_function(s)).collect::<Result<_, _>>()?;
    let start = match cfg.mode {
        Mode::Line => init_heavyside(),
        Mode::Torus => {
            if cfg.len < 2 {
                return Err(HarnessError::Config("`L` must be at least 2".into()));
            }
            init_torus(cfg.len, &torus_init(&cfg.init, cfg.len)?).map_err(config_err)?
        }
    };
    let n = f64::from(cfg.n);
    let opts = evolve_options(cfg.scheduler, cfg.window_cap);
    let mut report = ExperimentReport::new("simulate", seed, echo(cfg));

    let runs = run_replicas(cfg.replicas, seed, |_, rng| {
        let mut s = start.clone();
        let mut snaps = Vec::with_capacity(grid.len());
        for &t in &grid {
            s.evolve_with(&k, t * n * n, rng, &opts, |_, _| {})?;
            snaps.push(MeasureSnapshot::capture(&s, &k, &fs, n, t));
        }
        Ok::<_, SimError>(snaps)
    });
    abort_note(&mut report, "replicas", &runs.aborts);
    if runs.samples.is_empty() {
        return Err(run_err("every replica aborted"));
    }
    let mut csv = String::from(MeasureSnapshot::CSV_HEADER);
    csv.push('\n');
    for snap in &runs.samples[0] {
        csv.push_str(&snap.to_csv_rows());
    }
    report.snapshots = Some(csv);

    for (j, &t) in grid.iter().enumerate() {
        let at: Vec<&MeasureSnapshot> = runs.samples.iter().map(|r| &r[j]).collect();
        let cnt = at.len();
        for (i, f) in fs.iter().enumerate() {
            let xs: Vec<f64> = at.iter().map(|s| s.values[i].1).collect();
            let (m, se) = mean_se(&xs);
            report.cell("X", json!({"t": t, "f": f.id()}), m, se, cnt);
        }
        if cfg.mode == Mode::Line {
            let w: Vec<f64> = at.iter().map(|s| s.interface.expect("line").width as f64).collect();
            let (m, se) = mean_se(&w);
            report.cell("width", json!({"t": t}), m, se, cnt);
        }
        let b: Vec<f64> = at.iter().map(|s| s.beta).collect();
        let (m, se) = mean_se(&b);
        report.cell("beta", json!({"t": t}), m, se, cnt);
    }
    let held = runs.samples.iter().flatten().filter(|s| s.compact_containment_holds()).count();
    let total = runs.samples.len() * grid.len();
    report.criterion(
        "compact containment at every snapshot",
        held == total,
        format!("{held}/{total} snapshots satisfy mu([-m,m]) <= 2m + 1/N"),
    );
    Ok(report)
}
