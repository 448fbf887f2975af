//! Orchestration: turns a validated config into circuits, pipelines and
//! artifacts on disk. One run writes into one output directory:
//! `summary.json` always, plus per-mode files (see `formats`).
//!
//! Every random stream is derived from the single config seed, so a rerun
//! of the same config reproduces every artifact byte for byte no matter
//! how many worker threads the ensemble modes use. The tag map:
//!
//!   0          shared initial mesh phases for training
//!   1          simulate-mode detector sampling
//!   2 + i      SPSA stream for training arm i
//!   10 + i     post-training estimator evaluation for arm i
//!   100 + j    mitigate-bench ensemble member j
//!   200        random bench matrix (when no --matrix-seed is given)
//!   300 + b    permanent-bench sign-vector cell at budget index b
//!   400 + b    permanent-bench sampler cell at budget index b
//!
//! Training arms are ordered lossless, postselect, recycled_mitigated.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};

use qcbm_core::estimator::{
    estimator_errors, ideal_reference, mitigate, postselect, recycle, EstimatorKind,
    MitigationConfig,
};
use qcbm_core::fock::{alternating_input, FockState};
use qcbm_core::loss::{lossy_sample, LossModel};
use qcbm_core::matrix::random_unitary;
use qcbm_core::mesh::MeshParams;
use qcbm_core::output::ideal_distribution;
use qcbm_core::rng::{derive_seed, stream};
use qcbm_core::spsa::SpsaConfig;
use qcbm_core::target::{gaussian_mixture_target, GaussianComponent, TargetDistribution};
use qcbm_core::train::{estimate_distribution, spsa_train, Pipeline};

use crate::bench::{default_budgets, random_gaussian_matrix, estimator_comparison};
use crate::config::{RunConfig, RunMode, TargetConfig};
use crate::dataset::csv_returns_target;
use crate::formats::{
    read_matrix, write_counts, write_curve, write_estimator_table, write_history,
    write_matrix, write_mitigate_bench, write_perm_bench, write_summary, ArmSummary,
    MitigateBenchRow, MitigateBenchSummary, PermanentBenchSummary, SimulateSummary, Summary,
    Timing, TrainSummary,
};
use crate::info;

const TAG_INIT: u64 = 0;
const TAG_SIMULATE: u64 = 1;
const TAG_ARM: u64 = 2;
const TAG_FINAL: u64 = 10;
const TAG_ENSEMBLE: u64 = 100;
const TAG_MATRIX: u64 = 200;

/// Extra inputs of permanent-bench mode; these come from command-line
/// flags rather than the config document.
#[derive(Clone, Debug)]
pub struct PermBenchOptions {
    /// JSON file with nested `[re, im]` rows; `None` draws a random matrix.
    pub matrix_file: Option<PathBuf>,
    pub size: usize,
    /// Seed for the random matrix; `None` derives one from the run seed.
    pub matrix_seed: Option<u64>,
    pub epsilon: f64,
    pub delta: f64,
    /// Work budgets; `None` builds a grid around the Hoeffding budget
    /// that `epsilon` and `delta` imply.
    pub budgets: Option<Vec<u64>>,
    pub reps: u64,
    /// Where the CSV goes; `None` means `<output dir>/permanent_bench.csv`.
    pub out_csv: Option<PathBuf>,
}

impl Default for PermBenchOptions {
    fn default() -> Self {
        PermBenchOptions {
            matrix_file: None,
            size: 4,
            matrix_seed: None,
            epsilon: 0.1,
            delta: 0.05,
            budgets: None,
            reps: 8,
            out_csv: None,
        }
    }
}

/// Photons on the even modes; the default when no occupations are listed.
pub fn default_input_state(m: usize, n: u32) -> Result<FockState> {
    alternating_input(m, n)
        .map_err(|e| anyhow!("{e}; list circuit.input_occupations explicitly"))
}

fn input_state(cfg: &RunConfig) -> Result<FockState> {
    match &cfg.circuit.input_occupations {
        Some(occ) => Ok(FockState::new(occ.clone())),
        None => default_input_state(cfg.circuit.m, cfg.circuit.n),
    }
}

fn explicit_mesh(cfg: &RunConfig, phases: Vec<f64>) -> Result<MeshParams> {
    MeshParams::new(
        cfg.circuit.m,
        cfg.circuit.k,
        phases,
        cfg.circuit.single_phase_mode,
        cfg.circuit.tied_blocks,
    )
    .map_err(|e| anyhow!("circuit.phases: {e}"))
}

fn build_target(cfg: &RunConfig) -> Result<TargetDistribution> {
    match &cfg.target {
        TargetConfig::GaussianMixture {
            mu1,
            mu2,
            sigma1,
            sigma2,
            weight,
            x_min,
            x_max,
            bins,
        } => {
            let components = [
                GaussianComponent {
                    weight: *weight,
                    mean: *mu1,
                    std: *sigma1,
                },
                GaussianComponent {
                    weight: 1.0 - *weight,
                    mean: *mu2,
                    std: *sigma2,
                },
            ];
            gaussian_mixture_target(&components, *bins, *x_min, *x_max)
                .map_err(|e| anyhow!("target: {e}"))
        }
        TargetConfig::ReturnsCsv {
            path,
            bins,
            clip_lo,
            clip_hi,
        } => csv_returns_target(Path::new(path), *bins, *clip_lo, *clip_hi),
    }
}

fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Maps `f` over `0..count` on a small worker pool. Jobs self-seed, so
/// the merged output is identical for any worker count.
fn par_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if count <= 1 {
        return (0..count).map(f).collect();
    }
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(count);
    let next = AtomicUsize::new(0);
    let mut parts: Vec<Vec<(usize, T)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut part = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= count {
                            break;
                        }
                        part.push((i, f(i)));
                    }
                    part
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("ensemble worker panicked"))
            .collect()
    });
    let mut slots: Vec<Option<T>> = (0..count).map(|_| None).collect();
    for part in parts.drain(..) {
        for (i, value) in part {
            slots[i] = Some(value);
        }
    }
    slots
        .into_iter()
        .map(|s| s.expect("every index filled"))
        .collect()
}

fn now_unix_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn versions() -> std::collections::BTreeMap<String, String> {
    std::collections::BTreeMap::from([
        ("qcbm-core".to_string(), qcbm_core::VERSION.to_string()),
        ("qcbm-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
    ])
}

/// Runs a config end to end and writes its artifacts. Permanent-bench
/// runs get default matrix/budget options; use `run_with_options` to set
/// them.
pub fn run(cfg: &RunConfig) -> Result<Summary> {
    run_with_options(cfg, &PermBenchOptions::default())
}

pub fn run_with_options(cfg: &RunConfig, perm: &PermBenchOptions) -> Result<Summary> {
    let started = Instant::now();
    let out_dir = PathBuf::from(&cfg.output_dir);
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    info(&format!(
        "mode {}, seed {}, writing to {}",
        cfg.mode,
        cfg.seed,
        out_dir.display()
    ));
    let mut summary = Summary {
        mode: cfg.mode.as_str().to_string(),
        seed: cfg.seed,
        versions: versions(),
        config: cfg.to_json(),
        timing: Timing {
            wall_seconds: 0.0,
            finished_unix_ms: 0,
        },
        simulate: None,
        train: None,
        mitigate_bench: None,
        permanent_bench: None,
    };
    match cfg.mode {
        RunMode::Simulate => summary.simulate = Some(simulate(cfg, &out_dir)?),
        RunMode::Train => summary.train = Some(train(cfg, &out_dir)?),
        RunMode::MitigateBench => summary.mitigate_bench = Some(mitigate_bench(cfg, &out_dir)?),
        RunMode::PermanentBench => {
            summary.permanent_bench = Some(permanent_bench(cfg, perm, &out_dir)?)
        }
    }
    summary.timing = Timing {
        wall_seconds: started.elapsed().as_secs_f64(),
        finished_unix_ms: now_unix_ms(),
    };
    write_summary(&out_dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Samples the configured circuit once and writes the raw tallies plus
/// the configured estimator's reconstruction. Without explicit phases
/// the mesh is the identity, so the counts sit on the input pattern when
/// there is no loss.
fn simulate(cfg: &RunConfig, out_dir: &Path) -> Result<SimulateSummary> {
    let input = input_state(cfg)?;
    let params = match &cfg.circuit.phases {
        Some(ph) => explicit_mesh(cfg, ph.clone())?,
        None => explicit_mesh(
            cfg,
            vec![0.0; cfg.circuit.k * cfg.circuit.m * (cfg.circuit.m - 1)],
        )?,
    };
    let u = params.unitary();
    let ideal = ideal_distribution(&u, &input).map_err(|e| anyhow!("output distribution: {e}"))?;
    let loss = LossModel::new(cfg.eta).map_err(|e| anyhow!("noise.eta: {e}"))?;
    let counts = lossy_sample(
        &ideal,
        &loss,
        cfg.shots_per_evaluation,
        &mut stream(derive_seed(cfg.seed, TAG_SIMULATE), 0),
    )
    .map_err(|e| anyhow!("sampling: {e}"))?;
    write_counts(&out_dir.join("counts.csv"), &counts)?;

    let photons = input.photon_count();
    let (table, shots_used) = match cfg.estimator {
        EstimatorKind::Lossless => {
            let table = ideal_reference(&ideal).map_err(|e| anyhow!("lossless estimator: {e}"))?;
            (table, 0)
        }
        EstimatorKind::Postselect => {
            let est = postselect(&counts, photons).map_err(|e| anyhow!("postselect: {e}"))?;
            (est.table, est.shots_used)
        }
        EstimatorKind::RecycledRaw | EstimatorKind::RecycledMitigated => {
            let dec = recycle(&counts, photons).map_err(|e| anyhow!("recycle: {e}"))?;
            let shots = dec.shots_used;
            let (table, _info) = mitigate(&dec, &MitigationConfig::default())
                .map_err(|e| anyhow!("mitigation: {e}"))?;
            (table, shots)
        }
    };
    write_estimator_table(
        &out_dir
            .join("estimators")
            .join(format!("{}.csv", cfg.estimator.as_str())),
        &table,
    )?;
    info(&format!(
        "simulate: {} shots, {} distinct patterns",
        counts.total_shots(),
        counts.counts().len()
    ));
    Ok(SimulateSummary {
        shots: counts.total_shots(),
        distinct_patterns: counts.counts().len(),
        survivor_photons: counts.survivor_photons().clone(),
        estimator: cfg.estimator.as_str().to_string(),
        estimator_shots_used: shots_used,
    })
}

/// Which arms a training run compares. With loss present this is the
/// full three-way comparison on shared initial parameters; without loss
/// only the exact arm exists (the sampled estimators would have nothing
/// to recycle or post-select).
fn train_arms(eta: f64) -> Vec<EstimatorKind> {
    if eta == 0.0 {
        vec![EstimatorKind::Lossless]
    } else {
        vec![
            EstimatorKind::Lossless,
            EstimatorKind::Postselect,
            EstimatorKind::RecycledMitigated,
        ]
    }
}

fn train(cfg: &RunConfig, out_dir: &Path) -> Result<TrainSummary> {
    let input = input_state(cfg)?;
    let target = build_target(cfg)?;
    let initial = match &cfg.circuit.phases {
        Some(ph) => explicit_mesh(cfg, ph.clone())?,
        None => MeshParams::random(
            cfg.circuit.m,
            cfg.circuit.k,
            cfg.circuit.single_phase_mode,
            cfg.circuit.tied_blocks,
            &mut stream(derive_seed(cfg.seed, TAG_INIT), 0),
        )
        .map_err(|e| anyhow!("circuit: {e}"))?,
    };

    let mut arms = Vec::new();
    for (i, method) in train_arms(cfg.eta).into_iter().enumerate() {
        let arm_eta = if method == EstimatorKind::Lossless {
            0.0
        } else {
            cfg.eta
        };
        let pipeline = Pipeline {
            input: input.clone(),
            loss: LossModel::new(arm_eta).map_err(|e| anyhow!("noise.eta: {e}"))?,
            shots: cfg.shots_per_evaluation,
            estimator: method,
            mitigation: MitigationConfig::default(),
        };
        let spsa = SpsaConfig {
            seed: derive_seed(cfg.seed, TAG_ARM + i as u64),
            ..cfg.spsa.clone()
        };
        let history = spsa_train(&initial, &pipeline, &target, cfg.metric, &spsa)
            .map_err(|e| anyhow!("training the {} arm: {e}", method.as_str()))?;
        if history.records.is_empty() {
            bail!(
                "training the {} arm: the baseline loss was already non-finite",
                method.as_str()
            );
        }
        write_history(
            &out_dir.join(format!("history.{}.jsonl", method.as_str())),
            &history.records,
        )?;
        write_curve(
            &out_dir.join(format!("curve.{}.csv", method.as_str())),
            &history.records,
        )?;
        let final_est = estimate_distribution(
            &history.final_params,
            &pipeline,
            &mut stream(derive_seed(cfg.seed, TAG_FINAL + i as u64), 0),
        )
        .map_err(|e| anyhow!("final {} estimate: {e}", method.as_str()))?;
        write_estimator_table(
            &out_dir
                .join("estimators")
                .join(format!("{}.csv", method.as_str())),
            &final_est.table,
        )?;
        let first = history.records.first().expect("nonempty");
        let last = history.records.last().expect("nonempty");
        info(&format!(
            "train[{}]: loss {:.4} -> {:.4} over {} evaluations",
            method.as_str(),
            first.loss,
            last.loss,
            history.total_evaluations
        ));
        arms.push(ArmSummary {
            method: method.as_str().to_string(),
            initial_loss: first.loss,
            final_loss: last.loss,
            total_evaluations: history.total_evaluations,
            total_shots: history.total_shots,
            aborted: history.aborted.as_ref().map(|a| a.reason.clone()),
            mitigation_iterations: final_est.mitigation.as_ref().map(|m| m.iterations),
            mitigation_converged: final_est.mitigation.as_ref().map(|m| m.converged),
            final_params: history.final_params.clone(),
        });
    }
    Ok(TrainSummary {
        metric: cfg.metric.as_str().to_string(),
        bins: cfg.target.bins(),
        arms,
    })
}

/// Accuracy comparison of the mitigated and post-selected estimators on
/// an ensemble of Haar-random circuits sharing the configured size,
/// input and loss. One member: draw the circuit, sample the shot budget
/// once, feed the same tallies to both estimators, score each against
/// the exact collision-free reference.
fn mitigate_bench(cfg: &RunConfig, out_dir: &Path) -> Result<MitigateBenchSummary> {
    if cfg.eta <= 0.0 {
        bail!("mitigate-bench compares estimators under loss; set noise.eta above zero");
    }
    let input = input_state(cfg)?;
    let photons = input.photon_count();
    let loss = LossModel::new(cfg.eta).map_err(|e| anyhow!("noise.eta: {e}"))?;
    let results: Vec<Result<MitigateBenchRow>> = par_map(cfg.bench.seeds, |j| {
        let member_seed = derive_seed(cfg.seed, TAG_ENSEMBLE + j as u64);
        let u = random_unitary(cfg.circuit.m, &mut stream(member_seed, 0));
        let ideal =
            ideal_distribution(&u, &input).map_err(|e| anyhow!("member {j}: {e}"))?;
        let reference =
            ideal_reference(&ideal).map_err(|e| anyhow!("member {j}: {e}"))?;
        let counts = lossy_sample(
            &ideal,
            &loss,
            cfg.shots_per_evaluation,
            &mut stream(member_seed, 1),
        )
        .map_err(|e| anyhow!("member {j}: {e}"))?;
        let post =
            postselect(&counts, photons).map_err(|e| anyhow!("member {j}: postselect: {e}"))?;
        let dec = recycle(&counts, photons).map_err(|e| anyhow!("member {j}: recycle: {e}"))?;
        let (mit_table, mit_info) = mitigate(&dec, &MitigationConfig::default())
            .map_err(|e| anyhow!("member {j}: mitigation: {e}"))?;
        let post_err = estimator_errors(&post.table, &reference)
            .map_err(|e| anyhow!("member {j}: {e}"))?;
        let mit_err = estimator_errors(&mit_table, &reference)
            .map_err(|e| anyhow!("member {j}: {e}"))?;
        Ok(MitigateBenchRow {
            seed_index: j,
            derived_seed: member_seed,
            tvd_postselect: post_err.tvd,
            tvd_mitigated: mit_err.tvd,
            mitigation_iterations: mit_info.iterations,
            mitigation_converged: mit_info.converged,
        })
    });
    let rows: Vec<MitigateBenchRow> = results.into_iter().collect::<Result<_>>()?;
    write_mitigate_bench(&out_dir.join("mitigate_bench.csv"), &rows)?;

    let mut post: Vec<f64> = rows.iter().map(|r| r.tvd_postselect).collect();
    let mut mit: Vec<f64> = rows.iter().map(|r| r.tvd_mitigated).collect();
    let wins = rows
        .iter()
        .filter(|r| r.tvd_mitigated < r.tvd_postselect)
        .count();
    let summary = MitigateBenchSummary {
        modes: cfg.circuit.m,
        photons,
        eta: cfg.eta,
        shots: cfg.shots_per_evaluation,
        seeds: rows.len(),
        median_tvd_postselect: median(&mut post),
        median_tvd_mitigated: median(&mut mit),
        mitigated_win_rate: wins as f64 / rows.len() as f64,
    };
    info(&format!(
        "mitigate-bench: median TVD postselect {:.4}, mitigated {:.4}, win rate {:.2}",
        summary.median_tvd_postselect, summary.median_tvd_mitigated, summary.mitigated_win_rate
    ));
    Ok(summary)
}

fn permanent_bench(
    cfg: &RunConfig,
    opts: &PermBenchOptions,
    out_dir: &Path,
) -> Result<PermanentBenchSummary> {
    let a = match &opts.matrix_file {
        Some(path) => read_matrix(path)?,
        None => {
            let seed = opts
                .matrix_seed
                .unwrap_or_else(|| derive_seed(cfg.seed, TAG_MATRIX));
            random_gaussian_matrix(opts.size, &mut stream(seed, 0))
        }
    };
    // Keep the exact matrix next to the results so the run is repeatable
    // from its own artifacts.
    write_matrix(&out_dir.join("matrix.json"), &a)?;
    let budgets = match &opts.budgets {
        Some(b) => b.clone(),
        None => default_budgets(opts.epsilon, opts.delta)?,
    };
    let report = estimator_comparison(&a, &budgets, opts.reps, opts.delta, cfg.seed)?;
    let csv_path = opts
        .out_csv
        .clone()
        .unwrap_or_else(|| out_dir.join("permanent_bench.csv"));
    write_perm_bench(&csv_path, &report.rows)?;
    info(&format!(
        "permanent-bench: |Per|^2 = {:.6e}, slopes {:.3} (sign vectors) / {:.3} (sampler)",
        report.exact_perm_sq, report.gurvits_slope, report.sampler_slope
    ));
    Ok(PermanentBenchSummary {
        size: a.rows(),
        delta: opts.delta,
        reps: opts.reps,
        exact_perm_sq: report.exact_perm_sq,
        spectral_norm: report.spectral_norm,
        target_probability: report.target_probability,
        gurvits_slope: report.gurvits_slope,
        sampler_slope: report.sampler_slope,
        note: report.note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::{read_counts, read_curve, read_history, read_mitigate_bench, read_summary};
    use qcbm_core::fock::ClickPattern;

    fn base_config(dir: &Path) -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.output_dir = dir.to_string_lossy().into_owned();
        cfg
    }

    #[test]
    fn simulate_identity_concentrates_on_the_input() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_config(dir.path());
        cfg.shots_per_evaluation = 500;
        let summary = run(&cfg).unwrap();
        let sim = summary.simulate.unwrap();
        assert_eq!(sim.shots, 500);
        assert_eq!(sim.distinct_patterns, 1);
        let counts = read_counts(&dir.path().join("counts.csv")).unwrap();
        let (pattern, &count) = counts.iter().next().unwrap();
        assert_eq!(pattern.bits(), &[1, 0, 1, 0, 1, 0, 0, 0]);
        assert_eq!(count, 500);
        // The exact estimator sees the same point mass.
        let table =
            crate::formats::read_estimator_table(&dir.path().join("estimators/lossless.csv"))
                .unwrap();
        let full = ClickPattern::new(vec![1, 0, 1, 0, 1, 0, 0, 0]).unwrap();
        assert!((table.prob_of(&full) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn train_writes_every_artifact_and_all_three_arms() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_config(dir.path());
        cfg.mode = RunMode::Train;
        cfg.circuit.m = 4;
        cfg.circuit.n = 2;
        cfg.eta = 0.4;
        cfg.estimator = EstimatorKind::Postselect;
        cfg.shots_per_evaluation = 3_000;
        cfg.spsa.max_iters = 4;
        cfg.spsa.record_every = 2;
        cfg.target = TargetConfig::GaussianMixture {
            mu1: -2.0,
            mu2: 2.0,
            sigma1: 0.5,
            sigma2: 0.5,
            weight: 0.5,
            x_min: -4.0,
            x_max: 4.0,
            bins: 5,
        };
        cfg.seed = 33;
        let summary = run(&cfg).unwrap();
        let train = summary.train.as_ref().unwrap();
        assert_eq!(train.arms.len(), 3);
        for (arm, name) in train
            .arms
            .iter()
            .zip(["lossless", "postselect", "recycled_mitigated"])
        {
            assert_eq!(arm.method, name);
            assert!(arm.final_loss.is_finite());
            let history = read_history(&dir.path().join(format!("history.{name}.jsonl"))).unwrap();
            assert_eq!(history.last().unwrap().loss, arm.final_loss);
            let curve = read_curve(&dir.path().join(format!("curve.{name}.csv"))).unwrap();
            assert_eq!(curve.len(), history.len());
            assert_eq!(curve, history.iter().map(|r| (r.iteration, r.loss)).collect::<Vec<_>>());
            let table = crate::formats::read_estimator_table(
                &dir.path().join(format!("estimators/{name}.csv")),
            )
            .unwrap();
            assert!(table.is_normalized());
        }
        // Identical initial parameters across arms: iteration-0 records
        // carry the same phase vector.
        let a = read_history(&dir.path().join("history.lossless.jsonl")).unwrap();
        let b = read_history(&dir.path().join("history.postselect.jsonl")).unwrap();
        assert_eq!(a[0].params, b[0].params);
        let back = read_summary(&dir.path().join("summary.json")).unwrap();
        assert_eq!(back, summary);
    }

    #[test]
    fn lossless_training_runs_a_single_arm() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_config(dir.path());
        cfg.mode = RunMode::Train;
        cfg.circuit.m = 4;
        cfg.circuit.n = 2;
        cfg.spsa.max_iters = 3;
        cfg.target = TargetConfig::GaussianMixture {
            mu1: -1.0,
            mu2: 1.0,
            sigma1: 0.4,
            sigma2: 0.4,
            weight: 0.5,
            x_min: -2.0,
            x_max: 2.0,
            bins: 4,
        };
        let summary = run(&cfg).unwrap();
        let train = summary.train.unwrap();
        assert_eq!(train.arms.len(), 1);
        assert_eq!(train.arms[0].method, "lossless");
        assert_eq!(train.arms[0].total_shots, 0);
    }

    #[test]
    fn mitigate_bench_summarizes_an_ensemble() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_config(dir.path());
        cfg.mode = RunMode::MitigateBench;
        cfg.circuit.m = 5;
        cfg.circuit.n = 2;
        cfg.eta = 0.5;
        cfg.estimator = EstimatorKind::Postselect;
        cfg.shots_per_evaluation = 20_000;
        cfg.bench.seeds = 4;
        cfg.seed = 91;
        let summary = run(&cfg).unwrap();
        let bench = summary.mitigate_bench.unwrap();
        assert_eq!(bench.seeds, 4);
        assert!(bench.median_tvd_postselect > 0.0);
        assert!(bench.median_tvd_mitigated > 0.0);
        let rows = read_mitigate_bench(&dir.path().join("mitigate_bench.csv")).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[2].seed_index, 2);
        let wins = rows
            .iter()
            .filter(|r| r.tvd_mitigated < r.tvd_postselect)
            .count() as f64;
        assert_eq!(bench.mitigated_win_rate, wins / 4.0);
    }

    #[test]
    fn mitigate_bench_requires_loss() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_config(dir.path());
        cfg.mode = RunMode::MitigateBench;
        let err = run(&cfg).unwrap_err().to_string();
        assert!(err.contains("noise.eta"), "{err}");
    }

    #[test]
    fn permanent_bench_writes_grid_and_matrix() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_config(dir.path());
        cfg.mode = RunMode::PermanentBench;
        cfg.seed = 5;
        let opts = PermBenchOptions {
            size: 3,
            budgets: Some(vec![200, 1800]),
            reps: 2,
            ..PermBenchOptions::default()
        };
        let summary = run_with_options(&cfg, &opts).unwrap();
        let bench = summary.permanent_bench.unwrap();
        assert_eq!(bench.size, 3);
        assert!(bench.exact_perm_sq.is_finite());
        let rows =
            crate::formats::read_perm_bench(&dir.path().join("permanent_bench.csv")).unwrap();
        assert_eq!(rows.len(), 4);
        let a = read_matrix(&dir.path().join("matrix.json")).unwrap();
        assert_eq!(a.rows(), 3);
    }

    #[test]
    fn reruns_are_byte_identical_apart_from_summary_timing() {
        let run_once = |dir: &Path| {
            let mut cfg = base_config(dir);
            cfg.mode = RunMode::Train;
            cfg.circuit.m = 4;
            cfg.circuit.n = 2;
            cfg.eta = 0.3;
            cfg.estimator = EstimatorKind::Postselect;
            cfg.shots_per_evaluation = 2_000;
            cfg.spsa.max_iters = 3;
            cfg.target = TargetConfig::GaussianMixture {
                mu1: -1.0,
                mu2: 1.0,
                sigma1: 0.4,
                sigma2: 0.4,
                weight: 0.5,
                x_min: -2.0,
                x_max: 2.0,
                bins: 4,
            };
            cfg.seed = 12;
            run(&cfg).unwrap()
        };
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let s1 = run_once(d1.path());
        let s2 = run_once(d2.path());
        assert_eq!(s1.rerun_key(), s2.rerun_key());
        for name in [
            "history.lossless.jsonl",
            "history.postselect.jsonl",
            "history.recycled_mitigated.jsonl",
            "curve.postselect.csv",
            "estimators/recycled_mitigated.csv",
        ] {
            let a = fs::read(d1.path().join(name)).unwrap();
            let b = fs::read(d2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between reruns");
        }
    }

    #[test]
    fn median_handles_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn par_map_keeps_order() {
        let out = par_map(37, |i| i * i);
        assert_eq!(out, (0..37).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn alternating_default_error_suggests_occupations() {
        let err = default_input_state(3, 3).unwrap_err().to_string();
        assert!(err.contains("input_occupations"), "{err}");
    }
}
