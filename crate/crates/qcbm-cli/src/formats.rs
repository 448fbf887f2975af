//! On-disk artifact formats. Every writer here has a reader that inverts
//! it exactly: floats are emitted in shortest round-trip form, map keys
//! are sorted, and nothing in these files depends on wall-clock time
//! (timing lives only inside the summary, in its own block).
//!
//! Files:
//!   history.<method>.jsonl   one training record per line
//!   curve.<method>.csv       iteration, loss
//!   estimators/<method>.csv  pattern, probability
//!   counts.csv               pattern, count (simulate mode)
//!   mitigate_bench.csv       per-seed estimator accuracy
//!   permanent_bench.csv      error versus budget rows
//!   summary.json             resolved config, results, versions, timing

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use serde::{Deserialize, Serialize};

use qcbm_core::dist::DistributionTable;
use qcbm_core::fock::ClickPattern;
use qcbm_core::loss::LossyCounts;
use qcbm_core::matrix::{Complex64, ComplexMatrix};
use qcbm_core::mesh::MeshParams;
use qcbm_core::train::TrainingRecord;

fn create_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating directory {}", parent.display()))?;
        }
    }
    Ok(())
}

fn open_out(path: &Path) -> Result<fs::File> {
    create_parent(path)?;
    fs::File::create(path).with_context(|| format!("creating {}", path.display()))
}

// ---------------------------------------------------------------- history

pub fn write_history(path: &Path, records: &[TrainingRecord]) -> Result<()> {
    let mut f = open_out(path)?;
    for r in records {
        let line = serde_json::to_string(r)?;
        writeln!(f, "{line}")?;
    }
    Ok(())
}

pub fn read_history(path: &Path) -> Result<Vec<TrainingRecord>> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TrainingRecord = serde_json::from_str(&line)
            .with_context(|| format!("{}: line {}", path.display(), i + 1))?;
        out.push(record);
    }
    Ok(out)
}

// ------------------------------------------------------------------ curve

#[derive(Serialize, Deserialize)]
struct CurveRow {
    iteration: u32,
    loss: f64,
}

pub fn write_curve(path: &Path, records: &[TrainingRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(open_out(path)?);
    for r in records {
        w.serialize(CurveRow {
            iteration: r.iteration,
            loss: r.loss,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curve(path: &Path) -> Result<Vec<(u32, f64)>> {
    let mut r = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        let row: CurveRow = row.with_context(|| format!("reading {}", path.display()))?;
        out.push((row.iteration, row.loss));
    }
    Ok(out)
}

// -------------------------------------------------------- estimator table

#[derive(Serialize, Deserialize)]
struct TableRow {
    pattern: String,
    probability: f64,
}

pub fn write_estimator_table(
    path: &Path,
    table: &DistributionTable<ClickPattern>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(open_out(path)?);
    for (pattern, p) in table.iter() {
        w.serialize(TableRow {
            pattern: pattern.bitstring(),
            probability: p,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_estimator_table(path: &Path) -> Result<DistributionTable<ClickPattern>> {
    let mut r = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut space = Vec::new();
    let mut probs = Vec::new();
    for row in r.deserialize() {
        let row: TableRow = row.with_context(|| format!("reading {}", path.display()))?;
        space.push(
            ClickPattern::from_bitstring(&row.pattern)
                .map_err(|e| anyhow!("{}: {e}", path.display()))?,
        );
        probs.push(row.probability);
    }
    DistributionTable::new(space, probs).map_err(|e| anyhow!("{}: {e}", path.display()))
}

// ----------------------------------------------------------------- counts

#[derive(Serialize, Deserialize)]
struct CountRow {
    pattern: String,
    count: u64,
}

/// Clicks only; the survivor-photon histogram lives in the summary.
pub fn write_counts(path: &Path, counts: &LossyCounts) -> Result<()> {
    let mut w = csv::Writer::from_writer(open_out(path)?);
    for (pattern, &count) in counts.counts() {
        w.serialize(CountRow {
            pattern: pattern.bitstring(),
            count,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_counts(path: &Path) -> Result<BTreeMap<ClickPattern, u64>> {
    let mut r = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut out = BTreeMap::new();
    for row in r.deserialize() {
        let row: CountRow = row.with_context(|| format!("reading {}", path.display()))?;
        let pattern = ClickPattern::from_bitstring(&row.pattern)
            .map_err(|e| anyhow!("{}: {e}", path.display()))?;
        if out.insert(pattern, row.count).is_some() {
            return Err(anyhow!(
                "{}: pattern {} appears twice",
                path.display(),
                row.pattern
            ));
        }
    }
    Ok(out)
}

// ----------------------------------------------------------------- matrix

/// Complex matrices are stored as nested arrays of `[re, im]` pairs.
pub fn write_matrix(path: &Path, a: &ComplexMatrix) -> Result<()> {
    let rows: Vec<Vec<[f64; 2]>> = (0..a.rows())
        .map(|i| (0..a.cols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect())
        .collect();
    let mut f = open_out(path)?;
    serde_json::to_writer_pretty(&mut f, &rows)?;
    writeln!(f)?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<ComplexMatrix> {
    let text =
        fs::read_to_string(path).with_context(|| format!("opening {}", path.display()))?;
    let rows: Vec<Vec<[f64; 2]>> = serde_json::from_str(&text)
        .with_context(|| format!("{}: expected nested arrays of [re, im] pairs", path.display()))?;
    let nrows = rows.len();
    if nrows == 0 {
        return Err(anyhow!("{}: the matrix is empty", path.display()));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(anyhow!("{}: rows have unequal lengths", path.display()));
    }
    Ok(ComplexMatrix::from_fn(nrows, ncols, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

// --------------------------------------------------------- bench CSV rows

/// One seed of a mitigate-bench ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MitigateBenchRow {
    pub seed_index: usize,
    pub derived_seed: u64,
    pub tvd_postselect: f64,
    pub tvd_mitigated: f64,
    pub mitigation_iterations: u32,
    pub mitigation_converged: bool,
}

pub fn write_mitigate_bench(path: &Path, rows: &[MitigateBenchRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(open_out(path)?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_mitigate_bench(path: &Path) -> Result<Vec<MitigateBenchRow>> {
    let mut r = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row.with_context(|| format!("reading {}", path.display()))?);
    }
    Ok(out)
}

/// One (estimator, budget) cell of a permanent-bench grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermBenchRow {
    pub estimator: String,
    pub budget: u64,
    pub samples: u64,
    pub reps: u64,
    pub mean_abs_error: f64,
    pub mean_bound: f64,
    pub seconds: f64,
}

pub fn write_perm_bench(path: &Path, rows: &[PermBenchRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(open_out(path)?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_perm_bench(path: &Path) -> Result<Vec<PermBenchRow>> {
    let mut r = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row.with_context(|| format!("reading {}", path.display()))?);
    }
    Ok(out)
}

// ---------------------------------------------------------------- summary

/// Wall-clock bookkeeping; the only timestamps in any artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub finished_unix_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub shots: u64,
    pub distinct_patterns: usize,
    pub survivor_photons: BTreeMap<u32, u64>,
    pub estimator: String,
    pub estimator_shots_used: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub method: String,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub total_evaluations: u64,
    pub total_shots: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub aborted: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mitigation_iterations: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mitigation_converged: Option<bool>,
    pub final_params: MeshParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub metric: String,
    pub bins: usize,
    pub arms: Vec<ArmSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MitigateBenchSummary {
    pub modes: usize,
    pub photons: u32,
    pub eta: f64,
    pub shots: u64,
    pub seeds: usize,
    pub median_tvd_postselect: f64,
    pub median_tvd_mitigated: f64,
    /// Fraction of seeds where the mitigated estimate beat post-selection.
    pub mitigated_win_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermanentBenchSummary {
    pub size: usize,
    pub delta: f64,
    pub reps: u64,
    pub exact_perm_sq: f64,
    pub spectral_norm: f64,
    /// Probability of the marker pattern on the dilated circuit.
    pub target_probability: f64,
    pub gurvits_slope: f64,
    pub sampler_slope: f64,
    pub note: String,
}

/// The one self-describing artifact every run writes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mode: String,
    pub seed: u64,
    pub versions: BTreeMap<String, String>,
    /// The resolved config, defaults filled in.
    pub config: serde_json::Value,
    pub timing: Timing,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub simulate: Option<SimulateSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub train: Option<TrainSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mitigate_bench: Option<MitigateBenchSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub permanent_bench: Option<PermanentBenchSummary>,
}

impl Summary {
    /// The portion a rerun of the same config and seed must reproduce:
    /// everything except wall-clock timing and where the artifacts went.
    pub fn rerun_key(&self) -> Summary {
        let mut s = self.clone();
        s.timing = Timing {
            wall_seconds: 0.0,
            finished_unix_ms: 0,
        };
        if let Some(output) = s.config.get_mut("output") {
            if let Some(dir) = output.get_mut("dir") {
                *dir = serde_json::Value::Null;
            }
        }
        s
    }
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<()> {
    let mut f = open_out(path)?;
    serde_json::to_writer_pretty(&mut f, summary)?;
    writeln!(f)?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text =
        fs::read_to_string(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
