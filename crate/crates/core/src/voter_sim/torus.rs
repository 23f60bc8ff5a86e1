//! The voter model on the torus `Z/LZ` with the kernel projected mod `L`.

use rand::Rng;
use rand_distr::Exp1;

use super::rates::RateBook;
use super::{EventCount, FlipEvent, SimError};
use crate::kernel::Kernel;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TorusConfig {
    bits: Vec<bool>,
}

impl TorusConfig {
    pub fn new(bits: Vec<bool>) -> Result<Self, SimError> {
        if bits.len() < 2 {
            return Err(SimError::InvalidConfig(format!(
                "torus needs at least 2 sites, got {}",
                bits.len()
            )));
        }
        Ok(TorusConfig { bits })
    }

    /// Parses a `0`/`1` string, site 0 first.
    pub fn parse(s: &str) -> Result<Self, SimError> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(SimError::InvalidConfig(format!("bad site opinion `{other}`"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        TorusConfig::new(bits)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn opinion(&self, x: i64) -> bool {
        self.bits[x.rem_euclid(self.bits.len() as i64) as usize]
    }

    pub fn density(&self) -> f64 {
        self.bits.iter().filter(|&&b| b).count() as f64 / self.bits.len() as f64
    }

    pub fn is_consensus(&self) -> bool {
        self.bits.iter().all(|&b| b == self.bits[0])
    }

    /// Index `∑ bits[i] 2^i` of the configuration (site 0 least significant).
    pub fn index(&self) -> usize {
        assert!(self.bits.len() < usize::BITS as usize, "torus too large to index");
        self.bits
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &b)| acc | ((b as usize) << i))
    }
}

/// Kernel folded onto the torus: `(residue, mass)` for nonzero residues.
pub(crate) fn torus_offsets(k: &Kernel, len: usize) -> Vec<(usize, f64)> {
    k.projected_mod(len)
        .into_iter()
        .enumerate()
        .skip(1)
        .filter(|(_, m)| *m > 0.0)
        .collect()
}

fn rate_at(bits: &[bool], offsets: &[(usize, f64)], x: usize) -> f64 {
    let n = bits.len();
    offsets
        .iter()
        .filter(|(r, _)| bits[(x + r) % n] != bits[x])
        .map(|(_, m)| m)
        .sum()
}

pub(crate) fn flip_rate(cfg: &TorusConfig, k: &Kernel, x: usize) -> f64 {
    rate_at(&cfg.bits, &torus_offsets(k, cfg.len()), x)
}

/// Gillespie dynamics with per-site rates in a Fenwick tree.
pub(crate) fn evolve_gillespie<R, F>(
    cfg: &mut TorusConfig,
    time: &mut f64,
    k: &Kernel,
    t_end: f64,
    rng: &mut R,
    observer: &mut F,
) -> Result<EventCount, SimError>
where
    R: Rng + ?Sized,
    F: FnMut(&FlipEvent, &TorusConfig),
{
    let n = cfg.len();
    let offsets = torus_offsets(k, n);
    let rates = (0..n).map(|x| rate_at(&cfg.bits, &offsets, x)).collect();
    let mut book = RateBook::new(rates);
    let mut count = EventCount::default();
    loop {
        let total = book.total();
        // Consensus is absorbing: every rate vanishes.
        if total <= 1e-12 {
            *time = t_end;
            return Ok(count);
        }
        let dt: f64 = rng.sample::<f64, _>(Exp1) / total;
        if *time + dt > t_end {
            *time = t_end;
            return Ok(count);
        }
        *time += dt;
        count.proposed += 1;
        let x = book.pick(rng.random::<f64>());
        if book.rate(x) <= 0.0 {
            continue;
        }
        cfg.bits[x] = !cfg.bits[x];
        book.set(x, rate_at(&cfg.bits, &offsets, x));
        for (r, _) in &offsets {
            let z = (x + n - r) % n;
            book.set(z, rate_at(&cfg.bits, &offsets, z));
        }
        count.flips += 1;
        observer(
            &FlipEvent {
                time: *time,
                site: x as i64,
                opinion: cfg.bits[x],
            },
            cfg,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_index() {
        let c = TorusConfig::parse("01").unwrap();
        assert_eq!(c.index(), 2);
        assert!(TorusConfig::parse("1").is_err());
        assert!(TorusConfig::parse("0a").is_err());
        assert!(TorusConfig::parse("000").unwrap().is_consensus());
        assert!(!TorusConfig::parse("0101").unwrap().is_consensus());
    }

    #[test]
    fn two_site_rates() {
        let k = Kernel::nearest_neighbor();
        let c = TorusConfig::parse("01").unwrap();
        assert_eq!(flip_rate(&c, &k, 0), 1.0);
        assert_eq!(flip_rate(&c, &k, 1), 1.0);
    }
}
