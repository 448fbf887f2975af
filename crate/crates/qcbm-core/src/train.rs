//! End-to-end training: mesh phases are mapped to an estimated click
//! distribution, binned onto the target's support and scored, and SPSA
//! minimizes that score over the free phases.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::binning::{build_bin_map, model_bin_distribution};
use crate::dist::DistributionTable;
use crate::error::{Error, Result};
use crate::estimator::{
    ideal_reference, mitigate, postselect, recycle, EstimatorKind, EstimatorOutput,
    MitigationConfig,
};
use crate::fock::{ClickPattern, FockState};
use crate::loss::{lossy_sample, LossModel};
use crate::mesh::MeshParams;
use crate::metrics::{kl_divergence, tvd, KL_SMOOTHING};
use crate::output::ideal_distribution;
use crate::rng::ChaCha8Rng;
use crate::spsa::{minimize, SpsaAbort, SpsaConfig};
use crate::target::TargetDistribution;

/// Which distance the training loop minimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Kl,
    Tvd,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Kl => "kl",
            Metric::Tvd => "tvd",
        }
    }
}

impl core::fmt::Display for Metric {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything between a phase vector and an estimated distribution: the
/// input state, the loss channel, the per-evaluation shot budget and the
/// estimator that turns counts back into a distribution.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub input: FockState,
    pub loss: LossModel,
    pub shots: u64,
    pub estimator: EstimatorKind,
    pub mitigation: MitigationConfig,
}

impl Pipeline {
    pub fn validate(&self) -> Result<()> {
        if self.input.photon_count() == 0 {
            return Err(Error::input("pipeline needs at least one photon"));
        }
        if self.estimator == EstimatorKind::Lossless && !self.loss.is_lossless() {
            return Err(Error::input(
                "exact lossless estimation is only defined for a lossless channel",
            ));
        }
        if self.estimator != EstimatorKind::Lossless && self.shots == 0 {
            return Err(Error::input("sampled estimators need a shot budget"));
        }
        self.mitigation.validate()
    }

    /// Detector shots one loss evaluation consumes.
    pub fn shots_per_evaluation(&self) -> u64 {
        if self.estimator == EstimatorKind::Lossless {
            0
        } else {
            self.shots
        }
    }
}

/// Runs the configured estimator on the circuit described by `params`.
/// The lossless path is exact and consumes no shots; the sampled paths
/// draw `pipeline.shots` lossy shots from `rng` first.
pub fn estimate_distribution(
    params: &MeshParams,
    pipeline: &Pipeline,
    rng: &mut ChaCha8Rng,
) -> Result<EstimatorOutput> {
    pipeline.validate()?;
    if pipeline.input.modes() != params.modes() {
        return Err(Error::input(
            "input state and mesh disagree on the mode count",
        ));
    }
    let u = params.unitary();
    let ideal = ideal_distribution(&u, &pipeline.input)?;
    let photons = pipeline.input.photon_count();
    match pipeline.estimator {
        EstimatorKind::Lossless => Ok(EstimatorOutput {
            table: ideal_reference(&ideal)?,
            method: EstimatorKind::Lossless,
            shots_used: 0,
            mitigation: None,
        }),
        EstimatorKind::Postselect => {
            let counts = lossy_sample(&ideal, &pipeline.loss, pipeline.shots, rng)?;
            postselect(&counts, photons)
        }
        EstimatorKind::RecycledRaw => {
            let counts = lossy_sample(&ideal, &pipeline.loss, pipeline.shots, rng)?;
            let dec = recycle(&counts, photons)?;
            Ok(EstimatorOutput {
                table: dec.recycled,
                method: EstimatorKind::RecycledRaw,
                shots_used: dec.shots_used,
                mitigation: None,
            })
        }
        EstimatorKind::RecycledMitigated => {
            let counts = lossy_sample(&ideal, &pipeline.loss, pipeline.shots, rng)?;
            let dec = recycle(&counts, photons)?;
            let (table, info) = mitigate(&dec, &pipeline.mitigation)?;
            Ok(EstimatorOutput {
                table,
                method: EstimatorKind::RecycledMitigated,
                shots_used: dec.shots_used,
                mitigation: Some(info),
            })
        }
    }
}

/// Bins an estimated click distribution onto the target's support and
/// scores it with the requested metric.
pub fn evaluate_loss(
    estimate: &DistributionTable<ClickPattern>,
    target: &TargetDistribution,
    metric: Metric,
) -> Result<f64> {
    let map = build_bin_map(estimate.len(), target.bins())?;
    let model = model_bin_distribution(estimate, &map)?;
    match metric {
        Metric::Kl => kl_divergence(&target.bin_probs, &model, KL_SMOOTHING),
        Metric::Tvd => tvd(&target.bin_probs, &model),
    }
}

/// One loss measurement on the recording grid. Counters are cumulative
/// up to and including this record's own evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub iteration: u32,
    pub method: EstimatorKind,
    pub loss: f64,
    pub evaluations: u64,
    pub shots_spent: u64,
    pub params: Vec<f64>,
}

/// A full training run: the recorded loss curve plus the final iterate
/// and its resource totals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub method: EstimatorKind,
    pub metric: Metric,
    pub records: Vec<TrainingRecord>,
    pub final_params: MeshParams,
    pub total_evaluations: u64,
    pub total_shots: u64,
    pub aborted: Option<SpsaAbort>,
}

/// Minimizes the pipeline's loss against `target` over the free phases of
/// `initial`. Estimator failures (for example an empty post-selection
/// stratum) surface as errors tagged with the failing iteration; a loss
/// that turns non-finite ends the run early with the abort recorded in
/// the history instead.
pub fn spsa_train(
    initial: &MeshParams,
    pipeline: &Pipeline,
    target: &TargetDistribution,
    metric: Metric,
    cfg: &SpsaConfig,
) -> Result<TrainingHistory> {
    pipeline.validate()?;
    let free = initial.free_phases();
    let trace = minimize(&free, cfg, |phases, rng| {
        let params = initial.with_free_phases(phases)?;
        let out = estimate_distribution(&params, pipeline, rng)?;
        evaluate_loss(&out.table, target, metric)
    })?;
    let per_eval = pipeline.shots_per_evaluation();
    let records = trace
        .records
        .iter()
        .map(|r| TrainingRecord {
            iteration: r.iteration,
            method: pipeline.estimator,
            loss: r.loss,
            evaluations: r.evaluations,
            shots_spent: r.evaluations * per_eval,
            params: r.params.clone(),
        })
        .collect();
    let final_params = initial.with_free_phases(&trace.final_params)?;
    Ok(TrainingHistory {
        method: pipeline.estimator,
        metric,
        records,
        final_params,
        total_evaluations: trace.evaluations,
        total_shots: trace.evaluations * per_eval,
        aborted: trace.aborted,
    })
}
