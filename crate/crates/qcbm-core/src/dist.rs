//! Probability tables over canonically ordered pattern spaces.

use alloc::{collections::BTreeMap, format, vec::Vec};
use rand::Rng;

use crate::error::{Error, Result};
use crate::fock::{ClickPattern, FockState};

/// Types usable as distribution-table outcomes. Ordering must be the
/// canonical lexicographic order on the per-mode vector.
pub trait Pattern: Clone + Ord + core::fmt::Debug {
    fn modes(&self) -> usize;
}

impl Pattern for FockState {
    fn modes(&self) -> usize {
        FockState::modes(self)
    }
}

impl Pattern for ClickPattern {
    fn modes(&self) -> usize {
        ClickPattern::modes(self)
    }
}

/// Tolerance on |Σ probs − 1| for a table to count as normalized.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Probabilities over a sorted, duplicate-free pattern space.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionTable<P: Pattern> {
    space: Vec<P>,
    probs: Vec<f64>,
    normalized: bool,
}

impl<P: Pattern> DistributionTable<P> {
    fn validate(space: &[P], probs: &[f64]) -> Result<()> {
        if space.is_empty() {
            return Err(Error::input("distribution table needs a nonempty space"));
        }
        if space.len() != probs.len() {
            return Err(Error::input(format!(
                "space has {} patterns but {} probabilities were given",
                space.len(),
                probs.len()
            )));
        }
        if !space.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::input(
                "pattern space must be strictly ascending (sorted, duplicate-free)",
            ));
        }
        let m = space[0].modes();
        if space.iter().any(|p| p.modes() != m) {
            return Err(Error::input("patterns must share one mode count"));
        }
        if let Some(bad) = probs.iter().find(|&&p| !p.is_finite() || p < 0.0) {
            return Err(Error::input(format!(
                "probabilities must be finite and nonnegative, found {bad}"
            )));
        }
        Ok(())
    }

    /// Table whose probabilities must already sum to 1 within
    /// [`NORMALIZATION_TOL`].
    pub fn new(space: Vec<P>, probs: Vec<f64>) -> Result<Self> {
        Self::validate(&space, &probs)?;
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::input(format!(
                "probabilities sum to {total}, outside 1 ± {NORMALIZATION_TOL:.0e}"
            )));
        }
        Ok(Self {
            space,
            probs,
            normalized: true,
        })
    }

    /// Table of nonnegative weights; explicitly marked as not normalized.
    pub fn new_unnormalized(space: Vec<P>, probs: Vec<f64>) -> Result<Self> {
        Self::validate(&space, &probs)?;
        Ok(Self {
            space,
            probs,
            normalized: false,
        })
    }

    /// Normalizes nonnegative weights into a distribution.
    pub fn from_weights(space: Vec<P>, weights: Vec<f64>) -> Result<Self> {
        Self::validate(&space, &weights)?;
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::degenerate("total weight is zero"));
        }
        let probs = weights.iter().map(|w| w / total).collect();
        Ok(Self {
            space,
            probs,
            normalized: true,
        })
    }

    pub fn space(&self) -> &[P] {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn index_of(&self, pattern: &P) -> Option<usize> {
        self.space.binary_search(pattern).ok()
    }

    /// Probability of `pattern`, zero if it is outside the space.
    pub fn prob_of(&self, pattern: &P) -> f64 {
        self.index_of(pattern).map_or(0.0, |i| self.probs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&P, f64)> {
        self.space.iter().zip(self.probs.iter().copied())
    }

    /// Same space, new probabilities (checked as in [`Self::new`]).
    pub fn with_probs(&self, probs: Vec<f64>) -> Result<Self> {
        Self::new(self.space.clone(), probs)
    }
}

/// Cumulative lookup for repeated categorical draws from one table.
pub(crate) struct CumulativeSampler {
    cum: Vec<f64>,
}

impl CumulativeSampler {
    pub fn new<P: Pattern>(table: &DistributionTable<P>) -> Result<Self> {
        if !table.is_normalized() {
            return Err(Error::input(
                "categorical sampling needs a normalized table",
            ));
        }
        let mut cum = Vec::with_capacity(table.len());
        let mut acc = 0.0;
        for &p in table.probs() {
            acc += p;
            cum.push(acc);
        }
        if let Some(last) = cum.last_mut() {
            *last = acc.max(1.0); // guard the top edge against rounding
        }
        Ok(Self { cum })
    }

    pub fn draw(&self, rng: &mut impl Rng) -> usize {
        let r: f64 = rng.gen();
        let idx = self.cum.partition_point(|&c| c <= r);
        idx.min(self.cum.len() - 1)
    }
}

/// Draws `shots` outcomes from a normalized table, returning counts.
pub fn sample_categorical<P: Pattern>(
    table: &DistributionTable<P>,
    shots: u64,
    rng: &mut impl Rng,
) -> Result<BTreeMap<P, u64>> {
    let sampler = CumulativeSampler::new(table)?;
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let idx = sampler.draw(rng);
        *counts.entry(table.space()[idx].clone()).or_insert(0) += 1;
    }
    Ok(counts)
}
