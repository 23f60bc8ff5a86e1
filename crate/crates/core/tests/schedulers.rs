//! The two line schedulers must produce the same law.

use voterlab::mc_harness::run_replicas;
use voterlab::mc_harness::stats::mean_se;
use voterlab::observables::evaluate_XN;
use voterlab::voter_sim::{EvolveOptions, LineScheduler, SimError};
use voterlab::{init_heavyside, truncated_pareto_kernel, TestFunction};

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn pair_thinning_and_gillespie_agree_in_law() {
    let k = truncated_pareto_kernel(2.5, 40).unwrap();
    let f = TestFunction::<f64>::bump(-1.0, 1.0, 0.5).unwrap();
    let n_scale = 10.0;
    let t = 100.0;
    let reps = 6000;
    let sample = |sched, seed| {
        let o = EvolveOptions {
            window_cap: 1 << 20,
            line_scheduler: sched,
        };
        run_replicas(reps, seed, |_, rng| {
            let mut s = init_heavyside();
            s.evolve_with(&k, t, rng, &o, |_, _| {})?;
            let c = s.line().unwrap();
            Ok::<_, SimError>((c.width() as f64, c.leftmost_zero() as f64, evaluate_XN(&s, &f, n_scale)))
        })
        .samples
    };
    let a = sample(LineScheduler::PairThinning, 1);
    let b = sample(LineScheduler::Gillespie, 2);
    // KS critical value at level 0.001 is 1.95·√(2/n).
    let crit = 1.95 * (2.0 / reps as f64).sqrt();
    for (name, pick) in [
        ("width", (|r: &(f64, f64, f64)| r.0) as fn(&(f64, f64, f64)) -> f64),
        ("l", |r| r.1),
        ("X", |r| r.2),
    ] {
        let xa: Vec<f64> = a.iter().map(pick).collect();
        let xb: Vec<f64> = b.iter().map(pick).collect();
        let d = ks(&xa, &xb);
        assert!(d < crit, "{name}: KS {d} >= {crit}");
        let (ma, sa) = mean_se(&xa);
        let (mb, sb) = mean_se(&xb);
        assert!((ma - mb).abs() <= 4.0 * (sa * sa + sb * sb).sqrt(), "{name}: {ma} vs {mb}");
    }
}

#[test]
fn flips_reported_to_observer_replay_the_state() {
    let k = truncated_pareto_kernel(2.5, 30).unwrap();
    for sched in [LineScheduler::PairThinning, LineScheduler::Gillespie] {
        let o = EvolveOptions {
            window_cap: 1 << 20,
            line_scheduler: sched,
        };
        let mut rng = voterlab::mc_harness::replica_rng(5, 0);
        let mut s = init_heavyside();
        let mut replay = init_heavyside().line().unwrap().clone();
        let mut last = 0.0;
        s.evolve_with(&k, 300.0, &mut rng, &o, |e, _| {
            assert!(e.time >= last);
            last = e.time;
            assert_ne!(replay.opinion(e.site), e.opinion, "a reported flip must change the site");
            replay.set(e.site, e.opinion);
        })
        .unwrap();
        assert_eq!(&replay, s.line().unwrap());
    }
}
