//! Jump kernels `p(·)` on the integers.
//!
//! A [`Kernel`] is a finitely supported probability distribution on the
//! nonzero integers. Weights are stored in any [`Weight`] type; `Kernel<f64>`
//! is the working type for simulation, `Kernel<Rational64>` gives exact
//! moments.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use crate::scalar::{int, lit, Real, Weight};

/// Kernel construction failures.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error("kernel has no entries")]
    Empty,
    #[error("negative weight at displacement {0}")]
    NegativeWeight(i64),
    #[error("p(0) > 0 is not allowed (self-resampling is a no-op)")]
    SelfJump,
    #[error("duplicate displacement {0}")]
    Duplicate(i64),
    #[error("kernel mass {total} differs from 1")]
    MassNotOne { total: f64 },
    #[error("support generates only {gcd}Z, not Z")]
    Reducible { gcd: u64 },
    #[error("invalid kernel parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot parse kernel spec `{0}`")]
    Parse(String),
}

/// A validated jump kernel.
#[derive(Clone)]
pub struct Kernel<T: Weight = f64> {
    entries: Vec<(i64, T)>,
    support_radius: u64,
    sampler: Arc<WeightedAliasIndex<f64>>,
}

impl<T: Weight> fmt::Debug for Kernel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("entries", &self.entries)
            .field("support_radius", &self.support_radius)
            .finish()
    }
}

impl<T: Weight> PartialEq for Kernel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Validates `entries` as a kernel on the integers. Alias of [`Kernel::new`].
pub fn make_kernel<T: Weight>(
    entries: impl IntoIterator<Item = (i64, T)>,
) -> Result<Kernel<T>, KernelError> {
    Kernel::new(entries)
}

impl<T: Weight> Kernel<T> {
    /// Builds a kernel, requiring the support to generate all of `Z`
    /// (gcd of the support points equal to 1).
    pub fn new(entries: impl IntoIterator<Item = (i64, T)>) -> Result<Self, KernelError> {
        let k = Self::new_on_sublattice(entries)?;
        let g = k.lattice_gcd();
        if g != 1 {
            return Err(KernelError::Reducible { gcd: g });
        }
        Ok(k)
    }

    /// Like [`Kernel::new`] but accepts supports living on a proper
    /// sublattice `gZ`. Useful for moment arithmetic; such kernels do not
    /// define an irreducible walk.
    pub fn new_on_sublattice(
        entries: impl IntoIterator<Item = (i64, T)>,
    ) -> Result<Self, KernelError> {
        let mut map: BTreeMap<i64, T> = BTreeMap::new();
        for (d, w) in entries {
            if w < T::zero() {
                return Err(KernelError::NegativeWeight(d));
            }
            if map.contains_key(&d) {
                return Err(KernelError::Duplicate(d));
            }
            if w.is_zero() {
                continue;
            }
            if d == 0 {
                return Err(KernelError::SelfJump);
            }
            map.insert(d, w);
        }
        if map.is_empty() {
            return Err(KernelError::Empty);
        }
        let total = T::total(map.values().cloned());
        if (total.clone() - T::one()).abs() > T::mass_tolerance() {
            return Err(KernelError::MassNotOne {
                total: total.to_f64().unwrap_or(f64::NAN),
            });
        }
        let entries: Vec<(i64, T)> = map.into_iter().collect();
        let support_radius = entries.iter().map(|(d, _)| d.unsigned_abs()).max().unwrap_or(0);
        let weights: Vec<f64> = entries
            .iter()
            .map(|(_, w)| w.to_f64().unwrap_or(0.0))
            .collect();
        let sampler = WeightedAliasIndex::new(weights)
            .map_err(|e| KernelError::InvalidParameter(format!("alias table: {e}")))?;
        Ok(Kernel {
            entries,
            support_radius,
            sampler: Arc::new(sampler),
        })
    }

    /// Support points with their probabilities, sorted by displacement.
    pub fn entries(&self) -> &[(i64, T)] {
        &self.entries
    }

    /// `max |x|` over the support.
    pub fn support_radius(&self) -> u64 {
        self.support_radius
    }

    /// `p(d)`, zero off the support.
    pub fn prob(&self, d: i64) -> T {
        match self.entries.binary_search_by_key(&d, |(x, _)| *x) {
            Ok(i) => self.entries[i].1.clone(),
            Err(_) => T::zero(),
        }
    }

    /// gcd of the support points.
    pub fn lattice_gcd(&self) -> u64 {
        self.entries
            .iter()
            .fold(0, |g, (d, _)| gcd(g, d.unsigned_abs()))
    }

    /// `∑ x p(x)`.
    pub fn mean(&self) -> T {
        T::total(self.entries.iter().map(|(d, w)| int::<T>(*d) * w.clone()))
    }

    /// `∑ x² p(x)`.
    pub fn sigma2(&self) -> T {
        T::total(
            self.entries
                .iter()
                .map(|(d, w)| int::<T>(*d) * int::<T>(*d) * w.clone()),
        )
    }

    /// `∑ |x| p(x)` restricted to `x > 0` (first) and `x < 0` (second).
    pub fn one_sided_abs_moments(&self) -> (T, T) {
        let pos = T::total(
            self.entries
                .iter()
                .filter(|(d, _)| *d > 0)
                .map(|(d, w)| int::<T>(*d) * w.clone()),
        );
        let neg = T::total(
            self.entries
                .iter()
                .filter(|(d, _)| *d < 0)
                .map(|(d, w)| int::<T>(-*d) * w.clone()),
        );
        (pos, neg)
    }

    /// `p*(x) = (p(x) + p(-x)) / 2`.
    pub fn symmetrize(&self) -> Kernel<T> {
        let two: T = int(2);
        let mut map: BTreeMap<i64, T> = BTreeMap::new();
        for (d, w) in &self.entries {
            let half = w.clone() / two.clone();
            for key in [*d, -*d] {
                let e = map.entry(key).or_insert_with(T::zero);
                *e = e.clone() + half.clone();
            }
        }
        Kernel::new_on_sublattice(map).expect("symmetrization of a valid kernel is valid")
    }

    /// True when `p(x) = p(-x)` for every `x`.
    pub fn is_symmetric(&self) -> bool {
        self.entries.iter().all(|(d, w)| self.prob(-*d) == *w)
    }

    /// Mass of each residue class mod `modulus`, indexed by residue in
    /// `0..modulus`. Entry 0 collects jumps by multiples of `modulus`.
    pub fn projected_mod(&self, modulus: usize) -> Vec<T> {
        let m = modulus as i64;
        let mut out = vec![T::zero(); modulus];
        for (d, w) in &self.entries {
            let r = d.rem_euclid(m) as usize;
            out[r] = out[r].clone() + w.clone();
        }
        out
    }

    /// Draws a displacement with law `p`.
    pub fn sample_increment<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        self.entries[self.sampler.sample(rng)].0
    }

    /// The same kernel with `f64` weights.
    pub fn to_f64(&self) -> Kernel<f64> {
        Kernel {
            entries: self
                .entries
                .iter()
                .map(|(d, w)| (*d, w.to_f64().unwrap_or(f64::NAN)))
                .collect(),
            support_radius: self.support_radius,
            sampler: Arc::clone(&self.sampler),
        }
    }
}

impl Kernel<f64> {
    /// `{-1: 1/2, +1: 1/2}`.
    pub fn nearest_neighbor() -> Self {
        Kernel::new([(-1, 0.5), (1, 0.5)]).expect("nearest-neighbour kernel is valid")
    }
}

/// Symmetric kernel with `p(x) ∝ |x|^{-(1+γ)}` on `1 ≤ |x| ≤ cutoff`.
pub fn truncated_pareto_kernel<T: Real>(gamma: T, cutoff: u32) -> Result<Kernel<T>, KernelError> {
    if !(gamma > T::zero()) || !gamma.is_finite() {
        return Err(KernelError::InvalidParameter(format!(
            "gamma must be positive, got {gamma:?}"
        )));
    }
    if cutoff == 0 {
        return Err(KernelError::InvalidParameter("cutoff must be >= 1".into()));
    }
    let expo = -(T::one() + gamma);
    let raw: Vec<T> = (1..=cutoff).map(|d| int::<T>(d as i64).powf(expo)).collect();
    let norm = T::total(raw.iter().copied()) * lit::<T>(2.0);
    let mut entries = Vec::with_capacity(2 * cutoff as usize);
    for (i, w) in raw.iter().enumerate() {
        let d = i as i64 + 1;
        let p = *w / norm;
        entries.push((d, p));
        entries.push((-d, p));
    }
    Kernel::new(entries)
}

/// Named kernel presets accepted in configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    NearestNeighbor,
    Pareto { gamma: f64, cutoff: u32 },
    Literal(BTreeMap<i64, f64>),
}

impl KernelSpec {
    /// Parses `nn`, `pareto(gamma,cutoff)` or a JSON literal such as
    /// `{ "-1": 0.5, "1": 0.5 }`.
    pub fn parse(s: &str) -> Result<Self, KernelError> {
        let t = s.trim();
        if t == "nn" {
            return Ok(KernelSpec::NearestNeighbor);
        }
        if let Some(body) = t.strip_prefix("pareto(").and_then(|r| r.strip_suffix(')')) {
            let parts: Vec<&str> = body.split(',').map(str::trim).collect();
            if parts.len() != 2 {
                return Err(KernelError::Parse(s.into()));
            }
            let gamma: f64 = parts[0].parse().map_err(|_| KernelError::Parse(s.into()))?;
            let cutoff: u32 = parts[1].parse().map_err(|_| KernelError::Parse(s.into()))?;
            return Ok(KernelSpec::Pareto { gamma, cutoff });
        }
        if t.starts_with('{') {
            let raw: BTreeMap<String, f64> =
                serde_json::from_str(t).map_err(|_| KernelError::Parse(s.into()))?;
            let mut map = BTreeMap::new();
            for (k, v) in raw {
                let d: i64 = k.trim().parse().map_err(|_| KernelError::Parse(s.into()))?;
                if map.insert(d, v).is_some() {
                    return Err(KernelError::Duplicate(d));
                }
            }
            return Ok(KernelSpec::Literal(map));
        }
        Err(KernelError::Parse(s.into()))
    }

    pub fn build(&self) -> Result<Kernel<f64>, KernelError> {
        match self {
            KernelSpec::NearestNeighbor => Ok(Kernel::nearest_neighbor()),
            KernelSpec::Pareto { gamma, cutoff } => truncated_pareto_kernel(*gamma, *cutoff),
            KernelSpec::Literal(map) => Kernel::new(map.iter().map(|(d, w)| (*d, *w))),
        }
    }
}

/// Serialized as its text form, or as a displacement map for literals.
impl serde::Serialize for KernelSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            KernelSpec::Literal(map) => {
                let m: BTreeMap<String, f64> = map.iter().map(|(d, w)| (d.to_string(), *w)).collect();
                m.serialize(s)
            }
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> serde::Deserialize<'de> for KernelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Map(BTreeMap<String, f64>),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Text(t) => t,
            Raw::Map(m) => serde_json::to_string(&m).map_err(serde::de::Error::custom)?,
        };
        KernelSpec::parse(&text).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::NearestNeighbor => write!(f, "nn"),
            KernelSpec::Pareto { gamma, cutoff } => write!(f, "pareto({gamma},{cutoff})"),
            KernelSpec::Literal(map) => {
                let body: Vec<String> = map.iter().map(|(d, w)| format!("\"{d}\":{w}")).collect();
                write!(f, "{{{}}}", body.join(","))
            }
        }
    }
}
