//! Estimators of the lossless click distribution from lossy detector data.
//!
//! All estimators target the ideal n-photon circuit conditioned on
//! collision-free output, expressed over the space of n-click patterns:
//!
//! * post-selection keeps only shots where every photon arrived;
//! * recycling lifts the (n−1)-click stratum back to n clicks by summing,
//!   for each full pattern, the strata entries it could have lost one
//!   click from;
//! * mitigation removes the cross-term bias of recycling by fixed-point
//!   iteration, using the structural split of the recycled distribution
//!   into a signal part and a one-swap interference part.

use alloc::{collections::BTreeMap, format, vec::Vec};
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::dist::DistributionTable;
use crate::error::{Error, Result};
use crate::fock::{enumerate_clicks, ClickPattern, FockState};
use crate::loss::LossyCounts;
use crate::metrics::{kl_divergence, tvd, KL_SMOOTHING};

/// Which estimate of the lossless distribution to produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Exact lossless reference; needs a lossless channel.
    Lossless,
    /// Keep only full-click shots.
    Postselect,
    /// Recycle the one-missing-click stratum, uncorrected.
    RecycledRaw,
    /// Recycle, then iterate out the interference bias.
    RecycledMitigated,
}

impl EstimatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorKind::Lossless => "lossless",
            EstimatorKind::Postselect => "postselect",
            EstimatorKind::RecycledRaw => "recycled_raw",
            EstimatorKind::RecycledMitigated => "recycled_mitigated",
        }
    }

    pub fn all() -> [EstimatorKind; 4] {
        [
            EstimatorKind::Lossless,
            EstimatorKind::Postselect,
            EstimatorKind::RecycledRaw,
            EstimatorKind::RecycledMitigated,
        ]
    }
}

impl core::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fixed-point settings for the mitigation iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MitigationConfig {
    pub max_iters: u32,
    pub tol: f64,
}

impl Default for MitigationConfig {
    fn default() -> Self {
        Self {
            max_iters: 5,
            tol: 1e-6,
        }
    }
}

impl MitigationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::input("mitigation needs at least one iteration"));
        }
        if !self.tol.is_finite() || self.tol <= 0.0 {
            return Err(Error::input("mitigation tolerance must be positive"));
        }
        Ok(())
    }
}

/// What the mitigation iteration did.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MitigationInfo {
    pub iterations: u32,
    pub converged: bool,
}

/// An estimate over the full-click space plus bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorOutput {
    pub table: DistributionTable<ClickPattern>,
    pub method: EstimatorKind,
    /// Detector shots the estimate actually consumed.
    pub shots_used: u64,
    pub mitigation: Option<MitigationInfo>,
}

/// A recycled estimate split into its structural parts.
#[derive(Clone, Debug, PartialEq)]
pub struct RecycledDecomposition {
    /// The normalized recycled distribution.
    pub recycled: DistributionTable<ClickPattern>,
    /// Weight of the signal part; `1 / (m - n + 1)` up to rounding.
    pub p1: Option<f64>,
    /// The normalized one-swap interference part; `None` when it carries
    /// no mass (m = n).
    pub interference: Option<DistributionTable<ClickPattern>>,
    pub shots_used: u64,
    /// Click count of the stratum that was recycled.
    pub clicks: u32,
}

/// The lossless circuit conditioned on collision-free output, as click
/// patterns. Fails when the circuit never produces collision-free output.
pub fn ideal_reference(
    ideal: &DistributionTable<FockState>,
) -> Result<DistributionTable<ClickPattern>> {
    let modes = ideal.space()[0].modes();
    let photons = ideal.space()[0].photon_count();
    let space = enumerate_clicks(modes, photons)?;
    let mut weights = alloc::vec![0.0; space.len()];
    let mut found = false;
    for (state, p) in ideal.iter() {
        if state.is_collision_free() {
            let pattern = state.threshold();
            let idx = space
                .binary_search(&pattern)
                .map_err(|_| Error::numerical("click space misses a threshold image"))?;
            weights[idx] += p;
            if p > 0.0 {
                found = true;
            }
        }
    }
    if !found {
        return Err(Error::degenerate(
            "circuit has no collision-free output mass to condition on",
        ));
    }
    DistributionTable::from_weights(space, weights)
}

/// Post-selection on the full-click stratum of measured counts.
pub fn postselect(counts: &LossyCounts, photons: u32) -> Result<EstimatorOutput> {
    let stratum = counts.stratum(photons);
    let shots_used: u64 = stratum.values().sum();
    if shots_used == 0 {
        return Err(Error::insufficient_data(format!(
            "no shots with {photons} clicks to post-select on"
        )));
    }
    let space = enumerate_clicks(counts.modes(), photons)?;
    let weights: Vec<f64> = space
        .iter()
        .map(|p| stratum.get(p).copied().unwrap_or(0) as f64)
        .collect();
    Ok(EstimatorOutput {
        table: DistributionTable::from_weights(space, weights)?,
        method: EstimatorKind::Postselect,
        shots_used,
        mitigation: None,
    })
}

/// Lifts a distribution over (n−1)-click patterns to n clicks: each full
/// pattern collects the stratum mass of every pattern one click below it.
fn lift_one_click(
    modes: usize,
    photons: u32,
    stratum_prob: &BTreeMap<ClickPattern, f64>,
) -> Result<(Vec<ClickPattern>, Vec<f64>)> {
    let space = enumerate_clicks(modes, photons)?;
    let weights: Vec<f64> = space
        .iter()
        .map(|s| {
            s.support()
                .filter_map(|i| s.without_click(i))
                .map(|t| stratum_prob.get(&t).copied().unwrap_or(0.0))
                .sum()
        })
        .collect();
    Ok((space, weights))
}

/// Recycled estimate from measured counts: normalizes the (n−1)-click
/// stratum and lifts it. No decomposition is available without the ideal
/// distribution, so only the recycled table is filled in.
pub fn recycle(counts: &LossyCounts, photons: u32) -> Result<RecycledDecomposition> {
    if photons == 0 {
        return Err(Error::input("recycling needs at least one photon"));
    }
    let clicks = photons - 1;
    let stratum = counts.stratum(clicks);
    let shots_used: u64 = stratum.values().sum();
    if shots_used == 0 {
        return Err(Error::insufficient_data(format!(
            "no shots with {clicks} clicks to recycle"
        )));
    }
    let stratum_prob: BTreeMap<ClickPattern, f64> = stratum
        .into_iter()
        .map(|(p, c)| (p, c as f64 / shots_used as f64))
        .collect();
    let (space, weights) = lift_one_click(counts.modes(), photons, &stratum_prob)?;
    Ok(RecycledDecomposition {
        recycled: DistributionTable::from_weights(space, weights)?,
        p1: None,
        interference: None,
        shots_used,
        clicks,
    })
}

/// Recycled estimate from an exact lossy click distribution, conditioning
/// on its (n−1)-click stratum. Useful for bias analysis without sampling.
pub fn recycle_from_distribution(
    lossy: &DistributionTable<ClickPattern>,
    photons: u32,
) -> Result<RecycledDecomposition> {
    if photons == 0 {
        return Err(Error::input("recycling needs at least one photon"));
    }
    let clicks = photons - 1;
    let modes = lossy.space()[0].modes();
    let mut stratum_prob: BTreeMap<ClickPattern, f64> = BTreeMap::new();
    let mut mass = 0.0;
    for (p, prob) in lossy.iter() {
        if p.click_count() == clicks && prob > 0.0 {
            stratum_prob.insert(p.clone(), prob);
            mass += prob;
        }
    }
    if mass <= 0.0 {
        return Err(Error::degenerate(format!(
            "the {clicks}-click stratum carries no probability"
        )));
    }
    for v in stratum_prob.values_mut() {
        *v /= mass;
    }
    let (space, weights) = lift_one_click(modes, photons, &stratum_prob)?;
    Ok(RecycledDecomposition {
        recycled: DistributionTable::from_weights(space, weights)?,
        p1: None,
        interference: None,
        shots_used: 0,
        clicks,
    })
}

/// Recycling under the exact one-photon-lost model: the lost photon is
/// uniform over the n input photons, everything else ideal. Splits the
/// result into the signal part (the reference itself) and the one-swap
/// interference part.
pub fn recycle_single_loss_exact(
    reference: &DistributionTable<ClickPattern>,
) -> Result<RecycledDecomposition> {
    let modes = reference.space()[0].modes();
    let photons = reference.space()[0].click_count();
    if photons == 0 {
        return Err(Error::input("recycling needs at least one photon"));
    }
    if reference.space().iter().any(|p| p.click_count() != photons) {
        return Err(Error::input(
            "reference must live on a fixed-click-count space",
        ));
    }

    // Exact stratum distribution: losing one of n photons uniformly maps
    // pattern t + e_j down to t with weight p(t + e_j) / n.
    let mut stratum_prob: BTreeMap<ClickPattern, f64> = BTreeMap::new();
    for (s, p) in reference.iter() {
        if p == 0.0 {
            continue;
        }
        for i in s.support() {
            let t = s.without_click(i).expect("support modes are set");
            *stratum_prob.entry(t).or_insert(0.0) += p / photons as f64;
        }
    }

    let (space, weights) = lift_one_click(modes, photons, &stratum_prob)?;
    let recycled = DistributionTable::from_weights(space.clone(), weights.clone())?;

    // Split off the reference: what remains is the one-swap cross talk.
    let total: f64 = weights.iter().sum();
    let mut cross: Vec<f64> = Vec::with_capacity(space.len());
    for (i, w) in weights.iter().enumerate() {
        let c = w - reference.probs()[i];
        // Exact algebra keeps c >= 0; clip rounding dust.
        cross.push(c.max(0.0));
    }
    let cross_total: f64 = cross.iter().sum();
    let p1 = 1.0 / (1.0 + cross_total);
    debug_assert!((total - (1.0 + cross_total)).abs() < 1e-9);

    let interference = if cross_total > 1e-15 {
        Some(DistributionTable::from_weights(space, cross)?)
    } else {
        None
    };
    Ok(RecycledDecomposition {
        recycled,
        p1: Some(p1),
        interference,
        shots_used: 0,
        clicks: photons - 1,
    })
}

/// Indices of all one-swap neighbours `s - e_i + e_j` (click moved from a
/// set mode to an empty one) for every pattern in `space`.
fn swap_neighbour_indices(space: &[ClickPattern]) -> Vec<Vec<usize>> {
    space
        .iter()
        .map(|s| {
            let mut nbs = Vec::new();
            for i in s.support() {
                let t = s.without_click(i).expect("support modes are set");
                for j in 0..s.modes() {
                    if !s.is_set(j) {
                        let moved = t.with_click(j).expect("mode j is empty");
                        let idx = space
                            .binary_search(&moved)
                            .expect("swap neighbour stays in the space");
                        nbs.push(idx);
                    }
                }
            }
            nbs
        })
        .collect()
}

/// One round of the interference-subtraction update: rebuild the
/// cross-talk term from `current`, rescale the recycled table `base` by
/// the implied total, subtract, clip at zero and renormalize.
fn mitigation_step(
    base: &[f64],
    current: &[f64],
    neighbours: &[Vec<usize>],
    photons: u32,
) -> Result<Vec<f64>> {
    let n = photons as f64;
    let cross: Vec<f64> = neighbours
        .iter()
        .map(|nbs| nbs.iter().map(|&i| current[i]).sum::<f64>() / n)
        .collect();
    let z = 1.0 + cross.iter().sum::<f64>();
    let mut next: Vec<f64> = base
        .iter()
        .zip(&cross)
        .map(|(&b, &c)| (z * b - c).max(0.0))
        .collect();
    let total: f64 = next.iter().sum();
    if total <= 0.0 {
        return Err(Error::numerical("mitigation cancelled all probability mass"));
    }
    for v in &mut next {
        *v /= total;
    }
    Ok(next)
}

/// Removes the recycling cross talk by fixed-point iteration, starting
/// from the recycled table itself. The reference distribution is a fixed
/// point of the update; the iteration stops on `tol` or after `max_iters`
/// rounds, reporting which happened rather than failing on the latter.
pub fn mitigate(
    decomp: &RecycledDecomposition,
    cfg: &MitigationConfig,
) -> Result<(DistributionTable<ClickPattern>, MitigationInfo)> {
    cfg.validate()?;
    let photons = decomp.clicks + 1;
    let recycled = &decomp.recycled;
    if recycled.space().iter().any(|p| p.click_count() != photons) {
        return Err(Error::input(
            "recycled table must live on a fixed-click-count space",
        ));
    }
    let neighbours = swap_neighbour_indices(recycled.space());
    let base = recycled.probs();

    let mut current: Vec<f64> = base.to_vec();
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        iterations += 1;
        let next = mitigation_step(base, &current, &neighbours, photons)?;
        let delta = next
            .iter()
            .zip(&current)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        current = next;
        if delta < cfg.tol {
            converged = true;
            break;
        }
    }

    let table = recycled.with_probs(current)?;
    Ok((
        table,
        MitigationInfo {
            iterations,
            converged,
        },
    ))
}

/// Distances of an estimate from the reference it targets.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorReport {
    pub tvd: f64,
    pub kl: f64,
    /// Absolute per-pattern deviation, in space order.
    pub per_pattern: Vec<f64>,
}

pub fn estimator_errors(
    estimate: &DistributionTable<ClickPattern>,
    reference: &DistributionTable<ClickPattern>,
) -> Result<ErrorReport> {
    if estimate.space() != reference.space() {
        return Err(Error::input(
            "estimate and reference live on different spaces",
        ));
    }
    Ok(ErrorReport {
        tvd: tvd(reference.probs(), estimate.probs())?,
        kl: kl_divergence(reference.probs(), estimate.probs(), KL_SMOOTHING)?,
        per_pattern: estimate
            .probs()
            .iter()
            .zip(reference.probs())
            .map(|(a, b)| (a - b).abs())
            .collect(),
    })
}
