//! Per-site flip rates backed by a Fenwick tree.

use crate::fenwick::Fenwick;

/// Rebuild the tree from the exact rate array after this many updates, so
/// that floating-point drift in the partial sums stays bounded.
const REBUILD_EVERY: u32 = 4096;

#[derive(Debug, Clone)]
pub(crate) struct RateBook {
    rates: Vec<f64>,
    tree: Fenwick<f64>,
    since_rebuild: u32,
}

impl RateBook {
    pub(crate) fn new(rates: Vec<f64>) -> Self {
        let tree = Fenwick::from_values(&rates);
        RateBook {
            rates,
            tree,
            since_rebuild: 0,
        }
    }

    pub(crate) fn total(&self) -> f64 {
        self.tree.total()
    }

    pub(crate) fn rate(&self, i: usize) -> f64 {
        self.rates[i]
    }

    pub(crate) fn set(&mut self, i: usize, rate: f64) {
        let delta = rate - self.rates[i];
        if delta != 0.0 {
            self.rates[i] = rate;
            self.tree.add(i, delta);
            self.since_rebuild += 1;
            if self.since_rebuild >= REBUILD_EVERY {
                self.tree = Fenwick::from_values(&self.rates);
                self.since_rebuild = 0;
            }
        }
    }

    /// Index chosen with probability proportional to its rate, given
    /// `u` uniform on `[0, 1)`.
    pub(crate) fn pick(&self, u: f64) -> usize {
        self.tree.find(u * self.total())
    }
}
