use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn voterlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_voterlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn jsonl(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path.join("report.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn oracle_check_two_site_example_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = voterlab(&["oracle-check", "--L", "2", "--t", "0.5", "--init", "01", "--seed", "7"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let rows = jsonl(dir.path());
    assert_eq!(rows[0]["kind"], "header");
    assert_eq!(rows[0]["config"]["init"], "01");
    let p01 = rows
        .iter()
        .find(|r| r["kind"] == "reference" && r["name"] == "config_prob_exact" && r["params"]["config"] == "01")
        .unwrap();
    assert!((p01["value"].as_f64().unwrap() - 0.36787944117144233).abs() < 1e-10);
    assert_eq!(rows.last().unwrap()["passed"], true);
    assert!(dir.path().join("summary.txt").exists());
}

#[test]
fn missing_kernel_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = voterlab(&["theorem-check", "--N", "50"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.trim().lines().count(), 1, "{err}");
    assert!(err.contains("missing kernel"), "{err}");
    assert!(!dir.path().join("report.jsonl").exists());
}

#[test]
fn unknown_keys_and_bad_values_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["drift-check", "--kernel", "nn", "--set", "colour=blue"],
        vec!["drift-check", "--kernel", "nn", "--N", "fifty"],
        vec!["path-break", "--eps", "0.01"],
        vec!["simulate", "--kernel", "pareto(2.5)"],
    ] {
        let o = voterlab(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn failing_criterion_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = voterlab(
        &[
            "theorem-check", "--kernel", "nn", "--N", "20", "--replicas", "200",
            "--set", "dual_replicas=200", "--set", "limit_tol=0",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("FAIL one-point exact vs limit"));
}

#[test]
fn config_file_flags_override_and_rerun_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"kernel": "nn", "N": 30, "delta_list": [0.01, 0.02], "replicas": 50, "seed": 3}"#).unwrap();
    let a = dir.path().join("a");
    let o = Command::new(env!("CARGO_BIN_EXE_voterlab"))
        .args(["drift-check", "--config", cfg.to_str().unwrap(), "--N", "20", "--replicas", "400", "--out"])
        .arg(&a)
        .env("VOTERLAB_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.code().unwrap() <= 1, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = jsonl(&a);
    assert_eq!(rows[0]["seed"], 3);
    assert_eq!(rows[0]["config"]["N"], 20);
    assert_eq!(rows[0]["config"]["replicas"], 400);
    assert_eq!(rows[0]["config"]["delta_list"], serde_json::json!([0.01, 0.02]));

    // Feed the echoed config back in, on more threads.
    let mut echoed = rows[0]["config"].clone();
    echoed["seed"] = rows[0]["seed"].clone();
    let cfg2 = dir.path().join("echo.json");
    std::fs::write(&cfg2, echoed.to_string()).unwrap();
    let b = dir.path().join("b");
    Command::new(env!("CARGO_BIN_EXE_voterlab"))
        .args(["drift-check", "--config", cfg2.to_str().unwrap(), "--out"])
        .arg(&b)
        .env("VOTERLAB_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(
        std::fs::read(a.join("report.jsonl")).unwrap(),
        std::fs::read(b.join("report.jsonl")).unwrap()
    );
}

#[test]
fn simulate_writes_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let o = voterlab(
        &["simulate", "--kernel", "pareto(2.5,50)", "--N", "10", "--t_grid", "0,0.5,1", "--f_list", "bump(-1,1,0.5),bump(0,2,0.5)"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("snapshots.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("N,t,f_id,X,m,count,l,r,width,beta"));
    // 3 times × 2 functions × 3 radii.
    assert_eq!(lines.count(), 18);
    assert!(csv.contains("\"bump(0,2,0.5)\""));
}
