use serde_json::{json, Value};
use voterlab::mc_harness::experiments::{run_experiment, EXPERIMENTS};

fn header_config(jsonl: &str) -> Value {
    let first: Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    first["config"].clone()
}

#[test]
fn reports_reproduce_from_seed_and_echoed_config() {
    let cfg = json!({"kernel": "nn", "N": 20, "replicas": 300, "dual_replicas": 300});
    let a = run_experiment("theorem-check", cfg.clone(), 5).unwrap().to_jsonl();
    let b = run_experiment("theorem-check", cfg, 5).unwrap().to_jsonl();
    assert_eq!(a, b);
    let echoed = header_config(&a);
    let c = run_experiment("theorem-check", echoed, 5).unwrap().to_jsonl();
    assert_eq!(a, c);
    let d = run_experiment("theorem-check", header_config(&a), 6).unwrap().to_jsonl();
    assert_ne!(a, d);
}

#[test]
fn config_errors_are_classified() {
    let cases = [
        ("theorem-check", json!({})),
        ("theorem-check", json!({"kernel": "nn", "bogus": 1})),
        ("theorem-check", json!({"kernel": "pareto(1.5)"})),
        ("drift-check", json!({"kernel": {"1": 1.0}})),
        ("hitting-bound", json!({"kernel": "nn", "z_list": [2], "s_list": [4.0]})),
        ("path-break", json!({"heavy_gamma": 3.5})),
        ("path-break", json!({"N_list": [4]})),
        ("oracle-check", json!({"L": 13})),
        ("martingale", json!({"init": "0101"})),
        ("nonexistent", json!({})),
    ];
    for (id, cfg) in cases {
        let e = run_experiment(id, cfg.clone(), 0).unwrap_err();
        assert!(e.is_config(), "{id} {cfg}: {e}");
    }
    assert_eq!(EXPERIMENTS.len(), 11);
}

#[test]
fn oracle_check_two_site_example() {
    let r = run_experiment("oracle-check", json!({"L": 2, "t": 0.5, "init": "01", "replicas": 20000}), 3).unwrap();
    let exact = r
        .references
        .iter()
        .find(|x| x.name == "config_prob_exact" && x.params == json!({"config": "01"}))
        .unwrap();
    assert!((exact.value - (-1.0f64).exp()).abs() < 1e-10);
    assert!(r.passed(), "{}", r.summary());
}

#[test]
fn simulate_emits_snapshots() {
    let r = run_experiment("simulate", json!({"kernel": "pareto(2.5,50)", "N": 10, "replicas": 3}), 1).unwrap();
    let csv = r.snapshots.as_ref().unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("N,t,f_id,X,m,count,l,r,width,beta"));
    // 4 times × 1 function × 3 radii.
    assert_eq!(lines.count(), 12);
    assert!(r.passed());
    let torus = run_experiment("simulate", json!({"kernel": "nn", "mode": "torus", "L": 8, "init": "11110000", "N": 4}), 1).unwrap();
    assert_eq!(torus.snapshots.unwrap().lines().count(), 5);
}
