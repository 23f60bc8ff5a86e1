//! The experiment catalogue. Each experiment takes a flat, serde-validated
//! config and a master seed and returns an [`ExperimentReport`].
//!
//! Times in configs are macroscopic (`t` means microscopic time `tN²`)
//! except where a field says otherwise.

mod line;
mod simulate;
mod torus;
mod walks;

pub use line::{
    aldous, drift, path_break, theorem_check, variance_scaling, width_tightness, AldousConfig,
    DriftConfig, PathBreakConfig, TheoremConfig, VarianceConfig, WidthConfig,
};
pub use simulate::{simulate, SimulateConfig};
pub use torus::{martingale, oracle_check, MartingaleConfig, OracleCheckConfig};
pub use walks::{hitting_bound, limit_check, HittingConfig, LimitConfig};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use super::ExperimentReport;
use crate::kernel::{Kernel, KernelSpec};
use crate::observables::{evaluate_XN, TestFunction};
use crate::voter_sim::{init_heavyside, ConfigRef, EvolveOptions, LineScheduler, SimError, VoterState};

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Invalid or missing configuration; nothing was simulated.
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Run(String),
}

impl HarnessError {
    pub fn is_config(&self) -> bool {
        matches!(self, HarnessError::Config(_))
    }
}

fn config_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(e.to_string())
}

fn run_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Run(e.to_string())
}

/// Experiment ids, as used on the command line.
pub const EXPERIMENTS: [&str; 11] = [
    "simulate",
    "theorem-check",
    "aldous-check",
    "variance-scaling",
    "drift-check",
    "hitting-bound",
    "width-tightness",
    "path-break",
    "martingale",
    "oracle-check",
    "limit-check",
];

fn parse<C: DeserializeOwned>(v: Value) -> Result<C, HarnessError> {
    serde_json::from_value(v).map_err(config_err)
}

/// Deserializes `config` for experiment `id` and runs it.
pub fn run_experiment(id: &str, config: Value, seed: u64) -> Result<ExperimentReport, HarnessError> {
    let started = std::time::Instant::now();
    let mut report = match id {
        "simulate" => simulate(&parse(config)?, seed),
        "theorem-check" => theorem_check(&parse(config)?, seed),
        "aldous-check" => aldous(&parse(config)?, seed),
        "variance-scaling" => variance_scaling(&parse(config)?, seed),
        "drift-check" => drift(&parse(config)?, seed),
        "hitting-bound" => hitting_bound(&parse(config)?, seed),
        "width-tightness" => width_tightness(&parse(config)?, seed),
        "path-break" => path_break(&parse(config)?, seed),
        "martingale" => martingale(&parse(config)?, seed),
        "oracle-check" => oracle_check(&parse(config)?, seed),
        "limit-check" => limit_check(&parse(config)?, seed),
        other => Err(HarnessError::Config(format!("unknown experiment `{other}`"))),
    }?;
    report.wall_clock = started.elapsed().as_secs_f64();
    Ok(report)
}

fn echo<C: Serialize>(c: &C) -> Value {
    serde_json::to_value(c).expect("configs serialize")
}

fn require_kernel(k: &Option<KernelSpec>) -> Result<Kernel, HarnessError> {
    k.as_ref()
        .ok_or_else(|| HarnessError::Config("missing kernel spec (`kernel`)".into()))?
        .build()
        .map_err(config_err)
}

fn require_mean_zero(k: &Kernel) -> Result<(), HarnessError> {
    if k.mean().abs() > 1e-9 {
        return Err(HarnessError::Config(format!(
            "experiment needs a mean-zero kernel, mean is {}",
            k.mean()
        )));
    }
    Ok(())
}

fn test_function(s: &str) -> Result<TestFunction, HarnessError> {
    TestFunction::parse(s).map_err(config_err)
}

fn positive(name: &str, v: f64) -> Result<(), HarnessError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(HarnessError::Config(format!("`{name}` must be positive, got {v}")))
    }
}

fn at_least_one(name: &str, v: usize) -> Result<(), HarnessError> {
    if v >= 1 {
        Ok(())
    } else {
        Err(HarnessError::Config(format!("`{name}` must be at least 1")))
    }
}

fn nonempty<T>(name: &str, v: &[T]) -> Result<(), HarnessError> {
    if v.is_empty() {
        Err(HarnessError::Config(format!("`{name}` must not be empty")))
    } else {
        Ok(())
    }
}

/// Sorted copy of an ascending time grid, rejecting negatives.
fn time_grid(name: &str, v: &[f64]) -> Result<Vec<f64>, HarnessError> {
    nonempty(name, v)?;
    if v.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(HarnessError::Config(format!("`{name}` entries must be finite and >= 0")));
    }
    let mut g = v.to_vec();
    g.sort_by(f64::total_cmp);
    g.dedup();
    Ok(g)
}

/// Bernoulli mean and standard error of a list of indicators.
fn proportion(hits: impl IntoIterator<Item = bool>) -> (f64, f64, usize) {
    let xs: Vec<f64> = hits.into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect();
    let n = xs.len();
    let (m, se) = super::stats::mean_se(&xs);
    (m, se, n)
}

fn abort_note(report: &mut ExperimentReport, label: &str, aborts: &[(u64, String)]) {
    report.aborts += aborts.len();
    if let Some((i, e)) = aborts.first() {
        report.note(format!(
            "{label}: {} replicas aborted (first: replica {i}, {e})",
            aborts.len()
        ));
    }
}

/// Line event scheduler as named in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheduler {
    #[default]
    PairThinning,
    Gillespie,
}

fn evolve_options(s: Scheduler, window_cap: u64) -> EvolveOptions {
    EvolveOptions {
        window_cap,
        line_scheduler: match s {
            Scheduler::PairThinning => LineScheduler::PairThinning,
            Scheduler::Gillespie => LineScheduler::Gillespie,
        },
    }
}

/// `X^N(f)` along one heavy-side run, at the microscopic times `times`
/// (ascending).
fn heavyside_path<R: rand::Rng + ?Sized>(
    k: &Kernel,
    f: &TestFunction,
    n: f64,
    times: &[f64],
    opts: &EvolveOptions,
    rng: &mut R,
) -> Result<Vec<f64>, SimError> {
    let mut s = init_heavyside();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        s.evolve_with(k, t, rng, opts, |_, _| {})?;
        out.push(evaluate_XN(&s, f, n));
    }
    Ok(out)
}
