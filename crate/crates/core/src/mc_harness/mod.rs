//! Replicated Monte Carlo runs, estimators, reports and the experiment
//! catalogue.

pub mod experiments;
mod report;
pub mod stats;

pub use report::{Criterion, ExperimentReport, RefSource, Reference, ReportCell};

use std::sync::Once;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type ReplicaRng = ChaCha8Rng;

pub const THREADS_ENV: &str = "VOTERLAB_THREADS";

/// Stream `i` of the generator keyed by `seed`. Streams are disjoint
/// substreams of one ChaCha key, so replicas never share randomness.
pub fn replica_rng(seed: u64, i: u64) -> ReplicaRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}

/// Derives a master seed for a sub-experiment, so cells of one report use
/// unrelated replica families.
pub fn subseed(seed: u64, tag: u64) -> u64 {
    use rand::RngCore;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(tag);
    rng.next_u64()
}

static POOL: Once = Once::new();

/// Caps the global rayon pool at `VOTERLAB_THREADS` if set. Idempotent.
pub fn configure_threads_from_env() {
    POOL.call_once(|| {
        if let Some(n) = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
        {
            // Fails only if a pool already exists; keep that one.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    });
}

/// Outcome of `n` replicas: successful samples in replica order plus the
/// aborted replica indices and their errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaSet<T> {
    pub samples: Vec<T>,
    pub aborts: Vec<(u64, String)>,
}

impl<T> ReplicaSet<T> {
    pub fn requested(&self) -> usize {
        self.samples.len() + self.aborts.len()
    }
}

/// Runs `task(i, rng_i)` for `i < n` with `rng_i = replica_rng(seed, i)`.
/// The result does not depend on thread count or scheduling.
pub fn run_replicas<T, E, F>(n: usize, seed: u64, task: F) -> ReplicaSet<T>
where
    T: Send,
    E: std::fmt::Display,
    F: Fn(u64, &mut ReplicaRng) -> Result<T, E> + Sync,
{
    assert!(n >= 1, "need at least one replica");
    configure_threads_from_env();
    let results: Vec<Result<T, String>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i);
            task(i, &mut rng).map_err(|e| e.to_string())
        })
        .collect();
    let mut samples = Vec::with_capacity(n);
    let mut aborts = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => samples.push(v),
            Err(e) => aborts.push((i as u64, e)),
        }
    }
    ReplicaSet { samples, aborts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn deterministic_and_single_replica() {
        let task = |_: u64, r: &mut ReplicaRng| Ok::<_, String>(r.random::<u64>());
        let a = run_replicas(64, 9, task);
        let b = run_replicas(64, 9, task);
        assert_eq!(a, b);
        let one = run_replicas(1, 9, task);
        assert_eq!(one.samples[0], replica_rng(9, 0).random::<u64>());
        assert_ne!(a.samples[0], a.samples[1]);
    }

    #[test]
    fn aborts_are_counted() {
        let r = run_replicas(10, 1, |i, _| if i % 3 == 0 { Err("boom") } else { Ok(i) });
        assert_eq!(r.samples, vec![1, 2, 4, 5, 7, 8]);
        assert_eq!(r.aborts.len(), 4);
        assert_eq!(r.requested(), 10);
    }

    #[test]
    fn streams_uncorrelated() {
        let n = 1_000_000;
        let mut a = replica_rng(3, 0);
        let mut b = replica_rng(3, 1);
        let xs: Vec<f64> = (0..n).map(|_| a.random()).collect();
        let ys: Vec<f64> = (0..n).map(|_| b.random()).collect();
        let rho = stats::correlation(&xs, &ys);
        assert!(rho.abs() < 4.0 / (n as f64).sqrt(), "rho {rho}");
    }
}
