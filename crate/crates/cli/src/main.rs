use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};
use thiserror::Error;
use voterlab::mc_harness::experiments::run_experiment;
use voterlab::mc_harness::ExperimentReport;

#[derive(Parser, Debug)]
#[command(name = "voterlab", version, about = "Voter model interface simulator and Monte Carlo checks")]
struct Cli {
    /// Master seed; replica i uses stream i of it. Defaults to 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    replicas: Option<usize>,
    /// Output directory for report.jsonl, summary.txt and snapshots.csv.
    #[arg(long, global = true, default_value = "voterlab-out")]
    out: PathBuf,
    /// Flat JSON object of parameters; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Forward runs with snapshots.
    Simulate(Params),
    /// One-point law and second moment against the Brownian limit.
    TheoremCheck(Params),
    /// Increment probabilities over short windows.
    AldousCheck(Params),
    /// Variance of X over short times.
    VarianceScaling(Params),
    /// Mean increment of X over short times.
    DriftCheck(Params),
    /// Difference-walk hitting probabilities against their bound.
    HittingBound(Params),
    /// Quantiles of the interface width.
    WidthTightness(Params),
    /// Sup-width exceedances, heavy against light kernel.
    PathBreak(Params),
    /// Torus density martingale.
    Martingale(Params),
    /// Simulator and duality against the exact small-torus law.
    OracleCheck(Params),
    /// Coalescing Brownian motions and quadrature moments.
    LimitCheck(Params),
}

/// Experiment parameters. Values are JSON, a comma-separated list, or a
/// bare string; keys an experiment does not know are rejected.
#[derive(Args, Debug, Default)]
struct Params {
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long = "N")]
    n: Option<String>,
    #[arg(long = "L")]
    len: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long = "T")]
    t_end: Option<String>,
    #[arg(long)]
    t0: Option<String>,
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    f: Option<String>,
    #[arg(long = "f_list", alias = "f-list")]
    f_list: Option<String>,
    #[arg(long = "u_grid", alias = "u-grid")]
    u_grid: Option<String>,
    #[arg(long = "t_grid", alias = "t-grid")]
    t_grid: Option<String>,
    #[arg(long = "delta_list", alias = "delta-list")]
    delta_list: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long = "z_list", alias = "z-list")]
    z_list: Option<String>,
    #[arg(long = "s_list", alias = "s-list")]
    s_list: Option<String>,
    #[arg(long = "N_list", alias = "N-list")]
    n_list: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    scheduler: Option<String>,
    #[arg(long = "window_cap", alias = "window-cap")]
    window_cap: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    /// Any other parameter, as `key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Params {
    fn pairs(&self) -> Result<Vec<(String, String)>, CliError> {
        let named = [
            ("kernel", &self.kernel),
            ("N", &self.n),
            ("L", &self.len),
            ("t", &self.t),
            ("T", &self.t_end),
            ("t0", &self.t0),
            ("init", &self.init),
            ("f", &self.f),
            ("f_list", &self.f_list),
            ("u_grid", &self.u_grid),
            ("t_grid", &self.t_grid),
            ("delta_list", &self.delta_list),
            ("eps", &self.eps),
            ("z_list", &self.z_list),
            ("s_list", &self.s_list),
            ("N_list", &self.n_list),
            ("mode", &self.mode),
            ("scheduler", &self.scheduler),
            ("window_cap", &self.window_cap),
            ("tol", &self.tol),
        ];
        let mut out: Vec<(String, String)> = named
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect();
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got `{s}`")))?;
            out.push((k.trim().to_string(), v.to_string()));
        }
        Ok(out)
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Run(String),
}

/// Parameters always read as text unless they look like a JSON object.
const STRING_KEYS: [&str; 8] = [
    "kernel",
    "init",
    "f",
    "mode",
    "scheduler",
    "light_kernel",
    "contrast_kernel",
    "oracle_init",
];

/// Parameters holding lists; a single value becomes a one-element list.
const LIST_KEYS: [&str; 9] = [
    "u_grid", "t_grid", "delta_list", "z_list", "s_list", "N_list", "f_list", "pairs", "sets",
];

/// Splits on commas outside parentheses and brackets.
fn split_top(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

fn scalar(raw: &str) -> Value {
    let t = raw.trim();
    serde_json::from_str(t).unwrap_or_else(|_| Value::String(t.to_string()))
}

fn flag_value(key: &str, raw: &str) -> Value {
    let t = raw.trim();
    if STRING_KEYS.contains(&key) {
        return if t.starts_with('{') {
            scalar(t)
        } else {
            Value::String(t.to_string())
        };
    }
    if let Ok(v) = serde_json::from_str::<Value>(t) {
        return if LIST_KEYS.contains(&key) && !v.is_array() {
            Value::Array(vec![v])
        } else {
            v
        };
    }
    let parts = split_top(t);
    if parts.len() > 1 || LIST_KEYS.contains(&key) {
        Value::Array(parts.into_iter().map(scalar).collect())
    } else {
        Value::String(t.to_string())
    }
}

fn read_config_file(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(CliError::Config(format!("{} must hold a JSON object", path.display()))),
        Err(e) => Err(CliError::Config(format!("{}: {e}", path.display()))),
    }
}

fn resolve(cli: &Cli, params: &Params) -> Result<(Value, u64), CliError> {
    let mut map = match &cli.config {
        Some(p) => read_config_file(p)?,
        None => Map::new(),
    };
    let file_seed = match map.remove("seed") {
        Some(v) => Some(v.as_u64().ok_or_else(|| {
            CliError::Config("`seed` in config must be a nonnegative integer".into())
        })?),
        None => None,
    };
    let seed = cli.seed.or(file_seed).unwrap_or(0);
    for (k, v) in params.pairs()? {
        let value = flag_value(&k, &v);
        map.insert(k, value);
    }
    if let Some(r) = cli.replicas {
        map.insert("replicas".into(), Value::from(r));
    }
    Ok((Value::Object(map), seed))
}

fn experiment_id(c: &Command) -> (&'static str, &Params) {
    match c {
        Command::Simulate(p) => ("simulate", p),
        Command::TheoremCheck(p) => ("theorem-check", p),
        Command::AldousCheck(p) => ("aldous-check", p),
        Command::VarianceScaling(p) => ("variance-scaling", p),
        Command::DriftCheck(p) => ("drift-check", p),
        Command::HittingBound(p) => ("hitting-bound", p),
        Command::WidthTightness(p) => ("width-tightness", p),
        Command::PathBreak(p) => ("path-break", p),
        Command::Martingale(p) => ("martingale", p),
        Command::OracleCheck(p) => ("oracle-check", p),
        Command::LimitCheck(p) => ("limit-check", p),
    }
}

fn write_outputs(out: &Path, report: &ExperimentReport) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Run(format!("writing {}: {e}", out.display()));
    std::fs::create_dir_all(out).map_err(io)?;
    std::fs::write(out.join("report.jsonl"), report.to_jsonl()).map_err(io)?;
    std::fs::write(out.join("summary.txt"), report.summary()).map_err(io)?;
    if let Some(csv) = &report.snapshots {
        std::fs::write(out.join("snapshots.csv"), csv).map_err(io)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let (id, params) = experiment_id(&cli.command);
    let (config, seed) = resolve(cli, params)?;
    let report = run_experiment(id, config, seed).map_err(|e| {
        if e.is_config() {
            CliError::Config(e.to_string().trim_start_matches("config error: ").to_string())
        } else {
            CliError::Run(e.to_string())
        }
    })?;
    write_outputs(&cli.out, &report)?;
    print!("{}", report.summary());
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ CliError::Config(_)) => {
            eprintln!("voterlab: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("voterlab: {e}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn flag_values() {
        assert_eq!(flag_value("N", "50"), json!(50));
        assert_eq!(flag_value("u_grid", "-1,-0.5,0"), json!([-1, -0.5, 0]));
        assert_eq!(flag_value("N_list", "100"), json!([100]));
        assert_eq!(flag_value("t_grid", "[0.5, 1]"), json!([0.5, 1]));
        assert_eq!(flag_value("init", "110100"), json!("110100"));
        assert_eq!(flag_value("kernel", "pareto(2.5,100)"), json!("pareto(2.5,100)"));
        assert_eq!(flag_value("kernel", r#"{"-1":0.5,"1":0.5}"#), json!({"-1": 0.5, "1": 0.5}));
        assert_eq!(
            flag_value("f_list", "bump(-1,1,0.5),bump(0,2,0.5)"),
            json!(["bump(-1,1,0.5)", "bump(0,2,0.5)"])
        );
        assert_eq!(flag_value("f", "bump(-1,1,0.5)"), json!("bump(-1,1,0.5)"));
    }
}
