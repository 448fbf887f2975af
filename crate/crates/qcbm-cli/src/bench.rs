//! Head-to-head of the two randomized |permanent|^2 estimators over a
//! budget grid: the sign-vector average (squared) and the dilated-circuit
//! sampler. Budgets are matched on work, not on raw counts: one detector
//! shot is O(1) once the output distribution is built, while one
//! sign-vector sample costs n^2 multiplications, so a budget of t buys t
//! shots but only t / n^2 sign vectors.

use std::time::Instant;

use anyhow::{anyhow, Result};

use qcbm_core::matrix::{random_complex_gaussian, ComplexMatrix};
use qcbm_core::permanent::permanent;
use qcbm_core::permest::{
    gurvits_samples_for, sampler_estimate, spectral_norm, squared_estimate_with_samples,
};
use qcbm_core::rng::{derive_seed, stream, ChaCha8Rng};

use crate::formats::PermBenchRow;

/// Everything a grid run reports; rows go to CSV, the rest to the summary.
#[derive(Clone, Debug)]
pub struct PermBenchReport {
    pub rows: Vec<PermBenchRow>,
    pub exact_perm_sq: f64,
    pub spectral_norm: f64,
    /// |Per(A_s)|^2 of the rescaled matrix: the probability the sampler
    /// actually measures. It shrinks quickly as matrices grow, which is
    /// the sampler's practical limit.
    pub target_probability: f64,
    pub gurvits_slope: f64,
    pub sampler_slope: f64,
    pub note: String,
}

/// Square matrix with independent standard complex Gaussian entries.
pub fn random_gaussian_matrix(size: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    random_complex_gaussian(size, size, rng)
}

/// Default grid: powers of four around the Hoeffding budget that the
/// requested precision would demand.
pub fn default_budgets(epsilon: f64, delta: f64) -> Result<Vec<u64>> {
    let t = gurvits_samples_for(epsilon, delta).map_err(|e| anyhow!("{e}"))?;
    Ok([t / 4, t, 4 * t, 16 * t, 64 * t]
        .into_iter()
        .map(|b| b.max(1))
        .collect())
}

fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|&(x, y)| (x.ln(), y.ln()))
        .collect();
    if usable.len() < 2 {
        return f64::NAN;
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    sxy / sxx
}

/// Runs both estimators `reps` times at every budget and reports mean
/// absolute error against the exact |Per|^2, the mean stated bound, and
/// wall-clock per cell. Only the budget drives the precision here; the
/// error bars follow from the budget through each estimator's own
/// epsilon formula.
pub fn estimator_comparison(
    a: &ComplexMatrix,
    budgets: &[u64],
    reps: u64,
    delta: f64,
    seed: u64,
) -> Result<PermBenchReport> {
    if budgets.is_empty() {
        return Err(anyhow!("the budget grid is empty"));
    }
    if reps == 0 {
        return Err(anyhow!("need at least one repetition per budget"));
    }
    let n = a.rows();
    let exact = permanent(a).map_err(|e| anyhow!("exact permanent: {e}"))?;
    let exact_sq = exact.norm_sqr();
    let norm = spectral_norm(a).map_err(|e| anyhow!("spectral norm: {e}"))?;
    let target_probability = if norm > 0.0 {
        exact_sq / norm.powi(2 * n as i32)
    } else {
        0.0
    };

    let mut rows = Vec::with_capacity(2 * budgets.len());
    let mut gurvits_points = Vec::new();
    let mut sampler_points = Vec::new();
    for (b_idx, &budget) in budgets.iter().enumerate() {
        let sign_samples = (budget / (n * n) as u64).max(1);
        let started = Instant::now();
        let mut err_sum = 0.0;
        let mut bound_sum = 0.0;
        for rep in 0..reps {
            let mut rng = stream(derive_seed(seed, 300 + b_idx as u64), rep);
            let est = squared_estimate_with_samples(a, sign_samples, delta, &mut rng)
                .map_err(|e| anyhow!("sign-vector estimate: {e}"))?;
            err_sum += (est.value.re - exact_sq).abs();
            bound_sum += est.bound;
        }
        let mean_err = err_sum / reps as f64;
        rows.push(PermBenchRow {
            estimator: "gurvits_squared".into(),
            budget,
            samples: sign_samples,
            reps,
            mean_abs_error: mean_err,
            mean_bound: bound_sum / reps as f64,
            seconds: started.elapsed().as_secs_f64(),
        });
        gurvits_points.push((budget as f64, mean_err));

        let started = Instant::now();
        let mut err_sum = 0.0;
        let mut bound_sum = 0.0;
        for rep in 0..reps {
            let mut rng = stream(derive_seed(seed, 400 + b_idx as u64), rep);
            let est = sampler_estimate(a, budget, delta, &mut rng)
                .map_err(|e| anyhow!("dilated sampler estimate: {e}"))?;
            err_sum += (est.value.re - exact_sq).abs();
            bound_sum += est.bound;
        }
        let mean_err = err_sum / reps as f64;
        rows.push(PermBenchRow {
            estimator: "sampler".into(),
            budget,
            samples: budget,
            reps,
            mean_abs_error: mean_err,
            mean_bound: bound_sum / reps as f64,
            seconds: started.elapsed().as_secs_f64(),
        });
        sampler_points.push((budget as f64, mean_err));
    }

    Ok(PermBenchReport {
        rows,
        exact_perm_sq: exact_sq,
        spectral_norm: norm,
        target_probability,
        gurvits_slope: loglog_slope(&gurvits_points),
        sampler_slope: loglog_slope(&sampler_points),
        note: format!(
            "the sampler measures a pattern of probability {target_probability:.3e}; \
             that probability shrinks rapidly with matrix size, so shot budgets must \
             grow to keep pace"
        ),
    })
}
