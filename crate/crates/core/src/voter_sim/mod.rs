//! Forward simulation of the voter model.
//!
//! Site `x` adopts the opinion of site `y` at rate `p(y - x)`. On the line
//! the state is kept in interface representation (leftmost zero plus the
//! finite set of ones to its right); on a torus it is a plain bit vector
//! and the kernel is folded mod `L`.

mod line;
mod rates;
mod torus;

use std::fmt::Write as _;
use std::ops::AddAssign;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use line::LineConfig;
pub use torus::TorusConfig;

use crate::kernel::Kernel;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("active window {width} exceeds cap {cap}")]
    WindowOverflow { width: u64, cap: u64 },
    #[error("cannot evolve backwards: state at t={time}, requested t_end={t_end}")]
    TimeReversed { time: f64, t_end: f64 },
    #[error("operation requires {0} mode")]
    WrongMode(&'static str),
    #[error("{0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCount {
    pub flips: u64,
    /// Clock rings, including those that changed nothing.
    pub proposed: u64,
}

impl AddAssign for EventCount {
    fn add_assign(&mut self, rhs: Self) {
        self.flips += rhs.flips;
        self.proposed += rhs.proposed;
    }
}

/// One opinion change, reported to evolve observers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipEvent {
    pub time: f64,
    pub site: i64,
    /// Opinion after the flip.
    pub opinion: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Configuration {
    Line(LineConfig),
    Torus(TorusConfig),
}

/// Borrowed view of a configuration, handed to evolve observers.
#[derive(Debug, Clone, Copy)]
pub enum ConfigRef<'a> {
    Line(&'a LineConfig),
    Torus(&'a TorusConfig),
}

impl ConfigRef<'_> {
    pub fn to_owned(self) -> Configuration {
        match self {
            ConfigRef::Line(c) => Configuration::Line(c.clone()),
            ConfigRef::Torus(c) => Configuration::Torus(c.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Line,
    Torus,
}

/// Event scheduling on the line. Both produce the same law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LineScheduler {
    /// Thinned proposals over the three classes of state-changing pairs;
    /// O(1) per proposal regardless of the kernel's range.
    #[default]
    PairThinning,
    /// Per-site rates over the active window in a Fenwick tree.
    Gillespie,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvolveOptions {
    /// Largest allowed `width + 1 + 2 * support_radius` on the line.
    pub window_cap: u64,
    pub line_scheduler: LineScheduler,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            window_cap: 10_000,
            line_scheduler: LineScheduler::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoterState {
    pub time: f64,
    pub config: Configuration,
}

/// Heavy-side start: ones on `x ≤ 0`, zeros on `x ≥ 1`.
pub fn init_heavyside() -> VoterState {
    VoterState {
        time: 0.0,
        config: Configuration::Line(LineConfig::heavyside()),
    }
}

/// Torus state of `len` sites at time 0.
pub fn init_torus(len: usize, bits: &[bool]) -> Result<VoterState, SimError> {
    if bits.len() != len {
        return Err(SimError::InvalidConfig(format!(
            "torus length {len} but {} opinions given",
            bits.len()
        )));
    }
    Ok(VoterState {
        time: 0.0,
        config: Configuration::Torus(TorusConfig::new(bits.to_vec())?),
    })
}

/// Rate at which site `x` changes opinion.
pub fn flip_rate(s: &VoterState, k: &Kernel, x: i64) -> f64 {
    s.flip_rate(k, x)
}

/// Runs the dynamics from `s` to `t_end` and returns the new state.
pub fn evolve<R: Rng + ?Sized>(
    s: &VoterState,
    k: &Kernel,
    t_end: f64,
    rng: &mut R,
) -> Result<(VoterState, EventCount), SimError> {
    let mut out = s.clone();
    let count = out.evolve_to(k, t_end, rng)?;
    Ok((out, count))
}

/// True iff the torus configuration is all-0 or all-1.
pub fn consensus_reached(s: &VoterState) -> Result<bool, SimError> {
    match &s.config {
        Configuration::Torus(t) => Ok(t.is_consensus()),
        Configuration::Line(_) => Err(SimError::WrongMode("torus")),
    }
}

impl VoterState {
    pub fn mode(&self) -> Mode {
        match self.config {
            Configuration::Line(_) => Mode::Line,
            Configuration::Torus(_) => Mode::Torus,
        }
    }

    pub fn line(&self) -> Option<&LineConfig> {
        match &self.config {
            Configuration::Line(c) => Some(c),
            Configuration::Torus(_) => None,
        }
    }

    pub fn torus(&self) -> Option<&TorusConfig> {
        match &self.config {
            Configuration::Torus(c) => Some(c),
            Configuration::Line(_) => None,
        }
    }

    /// `η(x)`; torus sites are taken mod `L`.
    pub fn opinion(&self, x: i64) -> bool {
        match &self.config {
            Configuration::Line(c) => c.opinion(x),
            Configuration::Torus(c) => c.opinion(x),
        }
    }

    pub fn flip_rate(&self, k: &Kernel, x: i64) -> f64 {
        match &self.config {
            Configuration::Line(c) => c.flip_rate(k, x),
            Configuration::Torus(c) => {
                torus::flip_rate(c, k, x.rem_euclid(c.len() as i64) as usize)
            }
        }
    }

    /// `∑_x flip_rate(x)` over every site that can have a positive rate.
    pub fn total_flip_rate(&self, k: &Kernel) -> f64 {
        match &self.config {
            Configuration::Line(c) => line::total_flip_rate(c, k),
            Configuration::Torus(c) => (0..c.len()).map(|x| torus::flip_rate(c, k, x)).sum(),
        }
    }

    pub fn evolve_to<R: Rng + ?Sized>(
        &mut self,
        k: &Kernel,
        t_end: f64,
        rng: &mut R,
    ) -> Result<EventCount, SimError> {
        self.evolve_with(k, t_end, rng, &EvolveOptions::default(), |_, _| {})
    }

    /// Runs to `t_end`, calling `observer` after every flip with the event
    /// and the updated configuration.
    pub fn evolve_with<R, F>(
        &mut self,
        k: &Kernel,
        t_end: f64,
        rng: &mut R,
        opts: &EvolveOptions,
        mut observer: F,
    ) -> Result<EventCount, SimError>
    where
        R: Rng + ?Sized,
        F: FnMut(&FlipEvent, ConfigRef<'_>),
    {
        if t_end < self.time {
            return Err(SimError::TimeReversed {
                time: self.time,
                t_end,
            });
        }
        if t_end == self.time {
            return Ok(EventCount::default());
        }
        match &mut self.config {
            Configuration::Line(c) => {
                let mut wrapped = |e: &FlipEvent, cfg: &LineConfig| observer(e, ConfigRef::Line(cfg));
                match opts.line_scheduler {
                    LineScheduler::PairThinning => line::evolve_thinned(
                        c,
                        &mut self.time,
                        k,
                        t_end,
                        rng,
                        opts.window_cap,
                        &mut wrapped,
                    ),
                    LineScheduler::Gillespie => line::evolve_gillespie(
                        c,
                        &mut self.time,
                        k,
                        t_end,
                        rng,
                        opts.window_cap,
                        &mut wrapped,
                    ),
                }
            }
            Configuration::Torus(c) => {
                let mut wrapped =
                    |e: &FlipEvent, cfg: &TorusConfig| observer(e, ConfigRef::Torus(cfg));
                torus::evolve_gillespie(c, &mut self.time, k, t_end, rng, &mut wrapped)
            }
        }
    }

    /// One snapshot line: `t,l,r,width[,one_site...]` on the line or
    /// `t,bits_hex` on the torus.
    pub fn snapshot_line(&self) -> String {
        match &self.config {
            Configuration::Line(c) => {
                let mut s = format!(
                    "{},{},{},{}",
                    self.time,
                    c.leftmost_zero(),
                    c.rightmost_one(),
                    c.width()
                );
                for x in c.ones_right() {
                    let _ = write!(s, ",{x}");
                }
                s
            }
            Configuration::Torus(c) => format!("{},{}", self.time, bits_to_hex(c.bits())),
        }
    }
}

/// Hex encoding of a bit vector read as `∑ bits[i] 2^i`, most significant
/// nibble first, `ceil(len / 4)` lowercase digits.
pub fn bits_to_hex(bits: &[bool]) -> String {
    let digits = bits.len().div_ceil(4);
    (0..digits)
        .rev()
        .map(|j| {
            let nibble = (0..4)
                .filter(|b| bits.get(4 * j + b).copied().unwrap_or(false))
                .fold(0u32, |acc, b| acc | (1 << b));
            char::from_digit(nibble, 16).expect("nibble < 16")
        })
        .collect()
}

/// Inverse of [`bits_to_hex`] for a configuration of `len` sites.
pub fn hex_to_bits(hex: &str, len: usize) -> Result<Vec<bool>, SimError> {
    let mut bits = vec![false; len];
    for (j, c) in hex.chars().rev().enumerate() {
        let nibble = c
            .to_digit(16)
            .ok_or_else(|| SimError::InvalidConfig(format!("bad hex digit `{c}`")))?;
        for b in 0..4 {
            if nibble & (1 << b) != 0 {
                let i = 4 * j + b;
                if i >= len {
                    return Err(SimError::InvalidConfig(format!(
                        "hex `{hex}` has bits beyond {len} sites"
                    )));
                }
                bits[i] = true;
            }
        }
    }
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc_harness::replica_rng;
    use proptest::prelude::*;

    #[test]
    fn heavyside_init() {
        let s = init_heavyside();
        assert_eq!(s.time, 0.0);
        let c = s.line().unwrap();
        assert_eq!((c.leftmost_zero(), c.rightmost_one(), c.width()), (1, 0, -1));
        assert!(s.opinion(0));
        assert!(!s.opinion(1));
        assert_eq!(c.ones_right().count(), 0);
    }

    #[test]
    fn torus_init() {
        assert!(init_torus(2, &[false, true]).is_ok());
        assert!(init_torus(6, &[true, true, true, false, false, false]).is_ok());
        assert!(init_torus(1, &[true]).is_err());
        assert!(init_torus(3, &[true, false]).is_err());
    }

    #[test]
    fn flip_rate_examples() {
        let k = Kernel::nearest_neighbor();
        let s = init_heavyside();
        assert_eq!(flip_rate(&s, &k, 0), 0.5);
        assert_eq!(flip_rate(&s, &k, 1), 0.5);
        assert_eq!(flip_rate(&s, &k, -5), 0.0);
        let t = init_torus(2, &[false, true]).unwrap();
        assert_eq!(flip_rate(&t, &k, 0), 1.0);
    }

    #[test]
    fn consensus() {
        let all0 = init_torus(4, &[false; 4]).unwrap();
        assert!(consensus_reached(&all0).unwrap());
        let alt = init_torus(4, &[false, true, false, true]).unwrap();
        assert!(!consensus_reached(&alt).unwrap());
        let ones = init_torus(2, &[true, true]).unwrap();
        assert!(consensus_reached(&ones).unwrap());
        assert_eq!(
            consensus_reached(&init_heavyside()),
            Err(SimError::WrongMode("torus"))
        );
    }

    #[test]
    fn evolve_to_same_time_is_identity() {
        let k = Kernel::nearest_neighbor();
        let mut rng = replica_rng(1, 0);
        let s = init_heavyside();
        let (out, count) = evolve(&s, &k, 0.0, &mut rng).unwrap();
        assert_eq!(out, s);
        assert_eq!(count, EventCount::default());
        let mut later = s.clone();
        later.evolve_to(&k, 1.0, &mut rng).unwrap();
        assert!(matches!(
            later.evolve_to(&k, 0.5, &mut rng),
            Err(SimError::TimeReversed { .. })
        ));
    }

    #[test]
    fn nearest_neighbor_interface_stays_sharp() {
        let k = Kernel::nearest_neighbor();
        let mut rng = replica_rng(3, 0);
        let mut s = init_heavyside();
        s.evolve_with(&k, 200.0, &mut rng, &EvolveOptions::default(), |_, cfg| {
            if let ConfigRef::Line(c) = cfg {
                assert_eq!(c.width(), -1);
            }
        })
        .unwrap();
    }

    #[test]
    fn window_overflow_aborts() {
        let k = crate::kernel::truncated_pareto_kernel(0.5, 400).unwrap();
        let mut rng = replica_rng(5, 0);
        let mut s = init_heavyside();
        let opts = EvolveOptions {
            window_cap: 1000,
            ..EvolveOptions::default()
        };
        let res = s.evolve_with(&k, 1e6, &mut rng, &opts, |_, _| {});
        assert!(matches!(res, Err(SimError::WindowOverflow { cap: 1000, .. })));
    }

    #[test]
    fn fenwick_total_matches_site_rates() {
        // Run the Gillespie scheduler and compare its bookkeeping with a
        // from-scratch sum of flip rates after every event.
        let k = Kernel::new([(-2, 0.2), (-1, 0.3), (1, 0.3), (3, 0.2)]).unwrap();
        let mut rng = replica_rng(11, 0);
        let mut s = init_heavyside();
        let opts = EvolveOptions {
            line_scheduler: LineScheduler::Gillespie,
            ..EvolveOptions::default()
        };
        let mut checked = 0;
        s.evolve_with(&k, 30.0, &mut rng, &opts, |_, cfg| {
            let st = VoterState {
                time: 0.0,
                config: cfg.to_owned(),
            };
            let total = st.total_flip_rate(&k);
            let c = st.line().unwrap();
            let (a, b) = (c.leftmost_zero() - 3, c.rightmost_one() + 3);
            let wide: f64 = (a - 20..=b + 20).map(|x| st.flip_rate(&k, x)).sum();
            assert!((total - wide).abs() < 1e-12);
            for x in [a - 1, a - 7, b + 1, b + 9] {
                assert_eq!(st.flip_rate(&k, x), 0.0);
            }
            checked += 1;
        })
        .unwrap();
        assert!(checked > 10);
    }

    #[test]
    fn snapshot_format() {
        let s = VoterState {
            time: 1.5,
            config: Configuration::Line(LineConfig::from_parts(1, [3, 7]).unwrap()),
        };
        assert_eq!(s.snapshot_line(), "1.5,1,7,6,3,7");
        let t = init_torus(6, &[true, true, false, true, false, false]).unwrap();
        assert_eq!(t.snapshot_line(), "0,0b");
    }

    proptest! {
        #[test]
        fn hex_roundtrip(bits in proptest::collection::vec(any::<bool>(), 2..40)) {
            let hex = bits_to_hex(&bits);
            prop_assert_eq!(hex.len(), bits.len().div_ceil(4));
            prop_assert_eq!(hex_to_bits(&hex, bits.len()).unwrap(), bits);
        }
    }
}
