//! Binned target distributions a Born machine is trained to match.

use alloc::{format, vec, vec::Vec};
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Midpoint-rule subdivisions per bin when integrating a density.
const DENSITY_SUBPOINTS: usize = 64;

/// One Gaussian component of a mixture density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: f64,
    pub std: f64,
}

/// How a target histogram was produced, kept for provenance in outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetProvenance {
    GaussianMixture {
        components: Vec<GaussianComponent>,
        x_min: f64,
        x_max: f64,
    },
    ReturnsHistogram {
        rows: usize,
        clip_lo: f64,
        clip_hi: f64,
        x_min: f64,
        x_max: f64,
    },
}

/// A normalized histogram over `B` bins plus a record of its origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetDistribution {
    pub bin_probs: Vec<f64>,
    pub provenance: TargetProvenance,
}

impl TargetDistribution {
    pub fn bins(&self) -> usize {
        self.bin_probs.len()
    }
}

/// Integrates a Gaussian mixture density over `bins` equal-width bins on
/// `[x_min, x_max]` by the midpoint rule, then renormalizes the tail mass
/// away so the bins sum to one.
pub fn gaussian_mixture_target(
    components: &[GaussianComponent],
    bins: usize,
    x_min: f64,
    x_max: f64,
) -> Result<TargetDistribution> {
    if bins == 0 {
        return Err(Error::input("target needs at least one bin"));
    }
    if components.is_empty() {
        return Err(Error::input("mixture needs at least one component"));
    }
    if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
        return Err(Error::input(format!(
            "invalid support [{x_min}, {x_max}]"
        )));
    }
    for c in components {
        if !(c.weight.is_finite() && c.mean.is_finite() && c.std.is_finite()) {
            return Err(Error::input("mixture parameters must be finite"));
        }
        if c.weight <= 0.0 || c.std <= 0.0 {
            return Err(Error::input(
                "mixture weights and widths must be positive",
            ));
        }
    }
    let weight_total: f64 = components.iter().map(|c| c.weight).sum();
    let norm = 1.0 / (2.0 * core::f64::consts::PI).sqrt();
    let density = |x: f64| -> f64 {
        components
            .iter()
            .map(|c| {
                let z = (x - c.mean) / c.std;
                c.weight / weight_total * norm / c.std * (-0.5 * z * z).exp()
            })
            .sum()
    };

    let bin_width = (x_max - x_min) / bins as f64;
    let h = bin_width / DENSITY_SUBPOINTS as f64;
    let mut probs = Vec::with_capacity(bins);
    for b in 0..bins {
        let left = x_min + b as f64 * bin_width;
        let mass: f64 = (0..DENSITY_SUBPOINTS)
            .map(|s| density(left + (s as f64 + 0.5) * h) * h)
            .sum();
        probs.push(mass);
    }
    let total: f64 = probs.iter().sum();
    if total <= 0.0 {
        return Err(Error::degenerate(
            "mixture has no mass on the requested support",
        ));
    }
    for p in &mut probs {
        *p /= total;
    }
    Ok(TargetDistribution {
        bin_probs: probs,
        provenance: TargetProvenance::GaussianMixture {
            components: components.to_vec(),
            x_min,
            x_max,
        },
    })
}

/// Quantile of sorted data by linear interpolation between order statistics.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Histograms a return series into `bins` equal-width bins between the
/// `clip_lo` and `clip_hi` quantiles; values outside are clamped to the
/// edge bins. A series with no spread collapses onto the center bin.
pub fn returns_histogram_target(
    returns: &[f64],
    bins: usize,
    clip_lo: f64,
    clip_hi: f64,
) -> Result<TargetDistribution> {
    if bins == 0 {
        return Err(Error::input("target needs at least one bin"));
    }
    if returns.is_empty() {
        return Err(Error::input("return series is empty"));
    }
    if returns.iter().any(|r| !r.is_finite()) {
        return Err(Error::input("return series holds non-finite values"));
    }
    if !(0.0..=1.0).contains(&clip_lo) || !(0.0..=1.0).contains(&clip_hi) || clip_lo >= clip_hi {
        return Err(Error::input(format!(
            "clip quantiles must satisfy 0 <= lo < hi <= 1, got ({clip_lo}, {clip_hi})"
        )));
    }
    let mut sorted = returns.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values compare"));
    let x_min = quantile_sorted(&sorted, clip_lo);
    let x_max = quantile_sorted(&sorted, clip_hi);

    let provenance = TargetProvenance::ReturnsHistogram {
        rows: returns.len(),
        clip_lo,
        clip_hi,
        x_min,
        x_max,
    };

    if !((x_max - x_min).is_finite()) || x_max - x_min < 1e-300 {
        // No spread: all mass in the middle bin.
        let mut probs = vec![0.0; bins];
        probs[bins / 2] = 1.0;
        return Ok(TargetDistribution {
            bin_probs: probs,
            provenance,
        });
    }

    let width = (x_max - x_min) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &r in returns {
        let clamped = r.clamp(x_min, x_max);
        let idx = (((clamped - x_min) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let total = returns.len() as f64;
    Ok(TargetDistribution {
        bin_probs: counts.into_iter().map(|c| c as f64 / total).collect(),
        provenance,
    })
}
