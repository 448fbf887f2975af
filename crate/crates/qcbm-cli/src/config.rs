//! Run configuration: a single strict JSON document.
//!
//! Every field has a default, so `{}` is a valid config; unknown keys are
//! rejected rather than ignored, and validation collects every problem in
//! one pass instead of stopping at the first. Field paths in error
//! messages use dotted JSON notation (`circuit.input_occupations`).
//!
//! Defaults:
//!
//! | field                          | default            |
//! |--------------------------------|--------------------|
//! | `mode`                         | `"simulate"`       |
//! | `circuit.m`                    | 8                  |
//! | `circuit.n`                    | 3                  |
//! | `circuit.k`                    | 1                  |
//! | `circuit.input_occupations`    | null (alternating) |
//! | `circuit.phases`               | null (see below)   |
//! | `circuit.single_phase_mode`    | false              |
//! | `circuit.tied_blocks`          | false              |
//! | `noise.eta`                    | 0.0                |
//! | `sampling.shots_per_evaluation`| 50000              |
//! | `estimator`                    | `"lossless"`       |
//! | `target`                       | bimodal Gaussian, means -2/+2, widths 0.5, weight 0.5, range [-4, 4], 50 bins |
//! | `metric`                       | `"kl"`             |
//! | `spsa.a`                       | null (calibrated)  |
//! | `spsa.c`                       | 0.1                |
//! | `spsa.alpha`                   | 0.602              |
//! | `spsa.gamma`                   | 0.101              |
//! | `spsa.big_a`                   | null (max_iters/10)|
//! | `spsa.max_iters`               | 100                |
//! | `spsa.record_every`            | 1                  |
//! | `bench.seeds`                  | 20                 |
//! | `seed`                         | 0                  |
//! | `output.dir`                   | `"out"`            |
//!
//! `circuit.phases` is the full phase vector of the mesh
//! (`k * m * (m - 1)` slots). When null, simulate mode uses all zeros
//! (the identity mesh) and train mode draws the shared initialization
//! from the run seed. There is no `spsa.seed` key: every random stream
//! is derived from the top-level `seed`.

use std::fmt;

use serde_json::{json, Map, Value};

use qcbm_core::estimator::EstimatorKind;
use qcbm_core::spsa::SpsaConfig;
use qcbm_core::train::Metric;

/// What the run does. Matches the binary's subcommand.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunMode {
    Simulate,
    Train,
    MitigateBench,
    PermanentBench,
}

impl RunMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunMode::Simulate => "simulate",
            RunMode::Train => "train",
            RunMode::MitigateBench => "mitigate-bench",
            RunMode::PermanentBench => "permanent-bench",
        }
    }

    pub fn parse_name(s: &str) -> Option<Self> {
        match s {
            "simulate" => Some(RunMode::Simulate),
            "train" => Some(RunMode::Train),
            "mitigate-bench" => Some(RunMode::MitigateBench),
            "permanent-bench" => Some(RunMode::PermanentBench),
            _ => None,
        }
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Mesh topology and input state.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitConfig {
    pub m: usize,
    pub n: u32,
    pub k: usize,
    /// Explicit input occupations; `None` places photons on the even
    /// modes (requires `2n <= m + 1`).
    pub input_occupations: Option<Vec<u8>>,
    /// Full phase vector; `None` means identity (simulate) or a
    /// seed-derived draw (train).
    pub phases: Option<Vec<f64>>,
    pub single_phase_mode: bool,
    pub tied_blocks: bool,
}

/// What the trained distribution is compared against.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetConfig {
    GaussianMixture {
        mu1: f64,
        mu2: f64,
        sigma1: f64,
        sigma2: f64,
        weight: f64,
        x_min: f64,
        x_max: f64,
        bins: usize,
    },
    ReturnsCsv {
        path: String,
        bins: usize,
        clip_lo: f64,
        clip_hi: f64,
    },
}

impl TargetConfig {
    pub fn bins(&self) -> usize {
        match self {
            TargetConfig::GaussianMixture { bins, .. } => *bins,
            TargetConfig::ReturnsCsv { bins, .. } => *bins,
        }
    }
}

/// Ensemble size for mitigate-bench mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BenchConfig {
    pub seeds: usize,
}

/// A fully resolved run description.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: RunMode,
    pub circuit: CircuitConfig,
    pub eta: f64,
    pub shots_per_evaluation: u64,
    pub estimator: EstimatorKind,
    pub target: TargetConfig,
    pub metric: Metric,
    /// `seed` inside is a placeholder; the runner derives per-arm SPSA
    /// seeds from the top-level `seed`.
    pub spsa: SpsaConfig,
    pub bench: BenchConfig,
    pub seed: u64,
    pub output_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: RunMode::Simulate,
            circuit: CircuitConfig {
                m: 8,
                n: 3,
                k: 1,
                input_occupations: None,
                phases: None,
                single_phase_mode: false,
                tied_blocks: false,
            },
            eta: 0.0,
            shots_per_evaluation: 50_000,
            estimator: EstimatorKind::Lossless,
            target: TargetConfig::GaussianMixture {
                mu1: -2.0,
                mu2: 2.0,
                sigma1: 0.5,
                sigma2: 0.5,
                weight: 0.5,
                x_min: -4.0,
                x_max: 4.0,
                bins: 50,
            },
            metric: Metric::Kl,
            spsa: SpsaConfig::default(),
            bench: BenchConfig { seeds: 20 },
            seed: 0,
            output_dir: "out".into(),
        }
    }
}

impl RunConfig {
    /// The document with every default filled in, suitable for embedding
    /// in a summary so artifacts describe themselves. `parse_config`
    /// inverts it.
    pub fn to_json(&self) -> Value {
        let target = match &self.target {
            TargetConfig::GaussianMixture {
                mu1,
                mu2,
                sigma1,
                sigma2,
                weight,
                x_min,
                x_max,
                bins,
            } => json!({
                "kind": "gaussian_mixture",
                "mu1": mu1, "mu2": mu2,
                "sigma1": sigma1, "sigma2": sigma2,
                "weight": weight,
                "x_min": x_min, "x_max": x_max,
                "bins": bins,
            }),
            TargetConfig::ReturnsCsv {
                path,
                bins,
                clip_lo,
                clip_hi,
            } => json!({
                "kind": "returns_csv",
                "path": path,
                "bins": bins,
                "clip_quantiles": [clip_lo, clip_hi],
            }),
        };
        json!({
            "mode": self.mode.as_str(),
            "circuit": {
                "m": self.circuit.m,
                "n": self.circuit.n,
                "k": self.circuit.k,
                "input_occupations": self.circuit.input_occupations,
                "phases": self.circuit.phases,
                "single_phase_mode": self.circuit.single_phase_mode,
                "tied_blocks": self.circuit.tied_blocks,
            },
            "noise": { "eta": self.eta },
            "sampling": { "shots_per_evaluation": self.shots_per_evaluation },
            "estimator": self.estimator.as_str(),
            "target": target,
            "metric": self.metric.as_str(),
            "spsa": {
                "a": self.spsa.a,
                "c": self.spsa.c,
                "alpha": self.spsa.alpha,
                "gamma": self.spsa.gamma,
                "big_a": self.spsa.big_a,
                "max_iters": self.spsa.max_iters,
                "record_every": self.spsa.record_every,
            },
            "bench": { "seeds": self.bench.seeds },
            "seed": self.seed,
            "output": { "dir": self.output_dir },
        })
    }
}

/// Every problem found in one document, with dotted-path locations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub problems: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "configuration rejected:")?;
        for p in &self.problems {
            writeln!(f, "  - {p}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// Collects problems while the document is walked.
struct Check {
    problems: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check {
            problems: Vec::new(),
        }
    }

    fn push(&mut self, path: &str, msg: impl AsRef<str>) {
        self.problems.push(format!("{path}: {}", msg.as_ref()));
    }

    fn finish(self) -> Result<(), ConfigError> {
        if self.problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError {
                problems: self.problems,
            })
        }
    }
}

/// One object level: hands out fields by name and reports the keys
/// nobody asked for.
struct Section<'a> {
    path: &'a str,
    map: Map<String, Value>,
}

impl<'a> Section<'a> {
    fn root(cx: &mut Check, doc: &Value) -> Option<Map<String, Value>> {
        match doc {
            Value::Object(m) => Some(m.clone()),
            other => {
                cx.push("document", format!("expected a JSON object, got {}", kind_of(other)));
                None
            }
        }
    }

    fn new(path: &'a str, map: Map<String, Value>) -> Self {
        Section { path, map }
    }

    /// Removes and returns the field, so leftovers are unknown keys.
    fn take(&mut self, key: &str) -> Option<Value> {
        match self.map.remove(key) {
            Some(Value::Null) => None,
            other => other,
        }
    }

    /// Like `take`, but keeps an explicit null distinguishable.
    fn take_keep_null(&mut self, key: &str) -> Option<Value> {
        self.map.remove(key)
    }

    fn sub(&mut self, cx: &mut Check, key: &str) -> Option<Map<String, Value>> {
        match self.take(key) {
            None => None,
            Some(Value::Object(m)) => Some(m),
            Some(other) => {
                cx.push(
                    &field_path(self.path, key),
                    format!("expected an object, got {}", kind_of(&other)),
                );
                None
            }
        }
    }

    fn finish(self, cx: &mut Check, expected: &[&str]) {
        for key in self.map.keys() {
            cx.push(
                &field_path(self.path, key),
                format!("unknown key (expected one of: {})", expected.join(", ")),
            );
        }
    }
}

fn field_path(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn kind_of(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

fn want_u64(cx: &mut Check, path: &str, v: Value, default: u64) -> u64 {
    match v.as_u64() {
        Some(x) => x,
        None => {
            cx.push(path, format!("expected a nonnegative integer, got {}", kind_of(&v)));
            default
        }
    }
}

fn want_usize(cx: &mut Check, path: &str, v: Value, default: usize) -> usize {
    want_u64(cx, path, v, default as u64) as usize
}

fn want_f64(cx: &mut Check, path: &str, v: Value, default: f64) -> f64 {
    match v.as_f64() {
        Some(x) if x.is_finite() => x,
        Some(_) => {
            cx.push(path, "expected a finite number");
            default
        }
        None => {
            cx.push(path, format!("expected a number, got {}", kind_of(&v)));
            default
        }
    }
}

fn want_bool(cx: &mut Check, path: &str, v: Value, default: bool) -> bool {
    match v.as_bool() {
        Some(x) => x,
        None => {
            cx.push(path, format!("expected a boolean, got {}", kind_of(&v)));
            default
        }
    }
}

fn want_string(cx: &mut Check, path: &str, v: Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s),
        other => {
            cx.push(path, format!("expected a string, got {}", kind_of(&other)));
            None
        }
    }
}

fn want_occupations(cx: &mut Check, path: &str, v: Value) -> Option<Vec<u8>> {
    let arr = match v {
        Value::Array(a) => a,
        other => {
            cx.push(path, format!("expected an array of occupation counts, got {}", kind_of(&other)));
            return None;
        }
    };
    let mut out = Vec::with_capacity(arr.len());
    for (i, item) in arr.into_iter().enumerate() {
        match item.as_u64() {
            Some(x) if x <= u8::MAX as u64 => out.push(x as u8),
            _ => {
                cx.push(path, format!("entry {i} must be a small nonnegative integer"));
                return None;
            }
        }
    }
    Some(out)
}

fn want_f64_array(cx: &mut Check, path: &str, v: Value) -> Option<Vec<f64>> {
    let arr = match v {
        Value::Array(a) => a,
        other => {
            cx.push(path, format!("expected an array of numbers, got {}", kind_of(&other)));
            return None;
        }
    };
    let mut out = Vec::with_capacity(arr.len());
    for (i, item) in arr.into_iter().enumerate() {
        match item.as_f64() {
            Some(x) if x.is_finite() => out.push(x),
            _ => {
                cx.push(path, format!("entry {i} must be a finite number"));
                return None;
            }
        }
    }
    Some(out)
}

/// Optional f64 that may be stated as an explicit `null`.
fn opt_f64(cx: &mut Check, path: &str, v: Option<Value>, default: Option<f64>) -> Option<f64> {
    match v {
        None | Some(Value::Null) => default,
        Some(other) => Some(want_f64(cx, path, other, 0.0)),
    }
}

fn parse_circuit(cx: &mut Check, map: Map<String, Value>) -> CircuitConfig {
    let d = RunConfig::default().circuit;
    let mut s = Section::new("circuit", map);
    let m = s
        .take("m")
        .map(|v| want_usize(cx, "circuit.m", v, d.m))
        .unwrap_or(d.m);
    let n = s
        .take("n")
        .map(|v| want_u64(cx, "circuit.n", v, d.n as u64) as u32)
        .unwrap_or(d.n);
    let k = s
        .take("k")
        .map(|v| want_usize(cx, "circuit.k", v, d.k))
        .unwrap_or(d.k);
    let input_occupations = s
        .take("input_occupations")
        .and_then(|v| want_occupations(cx, "circuit.input_occupations", v));
    let phases = s
        .take("phases")
        .and_then(|v| want_f64_array(cx, "circuit.phases", v));
    let single_phase_mode = s
        .take("single_phase_mode")
        .map(|v| want_bool(cx, "circuit.single_phase_mode", v, d.single_phase_mode))
        .unwrap_or(d.single_phase_mode);
    let tied_blocks = s
        .take("tied_blocks")
        .map(|v| want_bool(cx, "circuit.tied_blocks", v, d.tied_blocks))
        .unwrap_or(d.tied_blocks);
    s.finish(
        cx,
        &[
            "m",
            "n",
            "k",
            "input_occupations",
            "phases",
            "single_phase_mode",
            "tied_blocks",
        ],
    );

    if m < 2 {
        cx.push("circuit.m", "a mesh needs at least two modes");
    }
    if n == 0 {
        cx.push("circuit.n", "the circuit needs at least one photon");
    }
    if k == 0 {
        cx.push("circuit.k", "the mesh needs at least one block");
    }
    if let Some(occ) = &input_occupations {
        if occ.len() != m {
            cx.push(
                "circuit.input_occupations",
                format!("has {} entries but circuit.m = {m}", occ.len()),
            );
        }
        let total: u64 = occ.iter().map(|&o| o as u64).sum();
        if total != n as u64 {
            cx.push(
                "circuit.input_occupations",
                format!("occupations sum to {total} photons but circuit.n = {n}"),
            );
        }
    }
    if let Some(ph) = &phases {
        let expected = k * m.saturating_sub(1) * m;
        if ph.len() != expected {
            cx.push(
                "circuit.phases",
                format!(
                    "needs the full slot vector, k * m * (m - 1) = {expected} entries, got {}",
                    ph.len()
                ),
            );
        }
    }

    CircuitConfig {
        m,
        n,
        k,
        input_occupations,
        phases,
        single_phase_mode,
        tied_blocks,
    }
}

fn parse_target(cx: &mut Check, map: Map<String, Value>) -> TargetConfig {
    let default = match RunConfig::default().target {
        TargetConfig::GaussianMixture {
            mu1,
            mu2,
            sigma1,
            sigma2,
            weight,
            x_min,
            x_max,
            bins,
        } => (mu1, mu2, sigma1, sigma2, weight, x_min, x_max, bins),
        TargetConfig::ReturnsCsv { .. } => unreachable!("default target is the mixture"),
    };
    let mut s = Section::new("target", map);
    let kind = s
        .take("kind")
        .and_then(|v| want_string(cx, "target.kind", v))
        .unwrap_or_else(|| "gaussian_mixture".into());
    match kind.as_str() {
        "gaussian_mixture" => {
            let mu1 = s
                .take("mu1")
                .map(|v| want_f64(cx, "target.mu1", v, default.0))
                .unwrap_or(default.0);
            let mu2 = s
                .take("mu2")
                .map(|v| want_f64(cx, "target.mu2", v, default.1))
                .unwrap_or(default.1);
            let sigma1 = s
                .take("sigma1")
                .map(|v| want_f64(cx, "target.sigma1", v, default.2))
                .unwrap_or(default.2);
            let sigma2 = s
                .take("sigma2")
                .map(|v| want_f64(cx, "target.sigma2", v, default.3))
                .unwrap_or(default.3);
            let weight = s
                .take("weight")
                .map(|v| want_f64(cx, "target.weight", v, default.4))
                .unwrap_or(default.4);
            let x_min = s
                .take("x_min")
                .map(|v| want_f64(cx, "target.x_min", v, default.5))
                .unwrap_or(default.5);
            let x_max = s
                .take("x_max")
                .map(|v| want_f64(cx, "target.x_max", v, default.6))
                .unwrap_or(default.6);
            let bins = s
                .take("bins")
                .map(|v| want_usize(cx, "target.bins", v, default.7))
                .unwrap_or(default.7);
            s.finish(
                cx,
                &[
                    "kind", "mu1", "mu2", "sigma1", "sigma2", "weight", "x_min", "x_max", "bins",
                ],
            );
            if sigma1 <= 0.0 {
                cx.push("target.sigma1", "widths must be positive");
            }
            if sigma2 <= 0.0 {
                cx.push("target.sigma2", "widths must be positive");
            }
            if !(0.0..=1.0).contains(&weight) {
                cx.push("target.weight", "must lie in [0, 1]");
            }
            if x_min >= x_max {
                cx.push("target.x_min", "range must satisfy x_min < x_max");
            }
            if bins == 0 {
                cx.push("target.bins", "needs at least one bin");
            }
            TargetConfig::GaussianMixture {
                mu1,
                mu2,
                sigma1,
                sigma2,
                weight,
                x_min,
                x_max,
                bins,
            }
        }
        "returns_csv" => {
            let path = s
                .take("path")
                .and_then(|v| want_string(cx, "target.path", v));
            if path.is_none() {
                cx.push("target.path", "a returns_csv target needs a file path");
            }
            let bins = s
                .take("bins")
                .map(|v| want_usize(cx, "target.bins", v, 50))
                .unwrap_or(50);
            let (mut clip_lo, mut clip_hi) = (0.01, 0.99);
            if let Some(v) = s.take("clip_quantiles") {
                match want_f64_array(cx, "target.clip_quantiles", v) {
                    Some(q) if q.len() == 2 => {
                        clip_lo = q[0];
                        clip_hi = q[1];
                    }
                    Some(_) => cx.push("target.clip_quantiles", "expected exactly [lo, hi]"),
                    None => {}
                }
            }
            s.finish(cx, &["kind", "path", "bins", "clip_quantiles"]);
            if bins == 0 {
                cx.push("target.bins", "needs at least one bin");
            }
            if !(0.0..=1.0).contains(&clip_lo)
                || !(0.0..=1.0).contains(&clip_hi)
                || clip_lo >= clip_hi
            {
                cx.push("target.clip_quantiles", "must satisfy 0 <= lo < hi <= 1");
            }
            TargetConfig::ReturnsCsv {
                path: path.unwrap_or_default(),
                bins,
                clip_lo,
                clip_hi,
            }
        }
        other => {
            cx.push(
                "target.kind",
                format!("unknown target kind {other:?} (expected gaussian_mixture or returns_csv)"),
            );
            RunConfig::default().target
        }
    }
}

fn parse_spsa(cx: &mut Check, map: Map<String, Value>) -> SpsaConfig {
    let d = SpsaConfig::default();
    let mut s = Section::new("spsa", map);
    let a = opt_f64(cx, "spsa.a", s.take_keep_null("a"), d.a);
    let c = s
        .take("c")
        .map(|v| want_f64(cx, "spsa.c", v, d.c))
        .unwrap_or(d.c);
    let alpha = s
        .take("alpha")
        .map(|v| want_f64(cx, "spsa.alpha", v, d.alpha))
        .unwrap_or(d.alpha);
    let gamma = s
        .take("gamma")
        .map(|v| want_f64(cx, "spsa.gamma", v, d.gamma))
        .unwrap_or(d.gamma);
    let big_a = opt_f64(cx, "spsa.big_a", s.take_keep_null("big_a"), d.big_a);
    let max_iters = s
        .take("max_iters")
        .map(|v| want_u64(cx, "spsa.max_iters", v, d.max_iters as u64) as u32)
        .unwrap_or(d.max_iters);
    let record_every = s
        .take("record_every")
        .map(|v| want_u64(cx, "spsa.record_every", v, d.record_every as u64) as u32)
        .unwrap_or(d.record_every);
    s.finish(
        cx,
        &["a", "c", "alpha", "gamma", "big_a", "max_iters", "record_every"],
    );
    let cfg = SpsaConfig {
        a,
        c,
        alpha,
        gamma,
        big_a,
        max_iters,
        record_every,
        seed: 0,
    };
    if let Err(e) = cfg.validate() {
        cx.push("spsa", e.message());
    }
    cfg
}

/// Parses and validates a config document, reporting every problem found.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let doc: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => {
            return Err(ConfigError {
                problems: vec![format!("document: not valid JSON ({e})")],
            })
        }
    };
    let mut cx = Check::new();
    let Some(root_map) = Section::root(&mut cx, &doc) else {
        return Err(ConfigError {
            problems: cx.problems,
        });
    };
    let d = RunConfig::default();
    let mut root = Section::new("", root_map);

    let mode = match root.take("mode") {
        None => d.mode,
        Some(v) => match want_string(&mut cx, "mode", v) {
            Some(s) => RunMode::parse_name(&s).unwrap_or_else(|| {
                cx.push(
                    "mode",
                    format!(
                        "unknown mode {s:?} (expected simulate, train, mitigate-bench or permanent-bench)"
                    ),
                );
                d.mode
            }),
            None => d.mode,
        },
    };

    let circuit = match root.sub(&mut cx, "circuit") {
        Some(m) => parse_circuit(&mut cx, m),
        None => d.circuit.clone(),
    };

    let eta = match root.sub(&mut cx, "noise") {
        Some(m) => {
            let mut s = Section::new("noise", m);
            let eta = s
                .take("eta")
                .map(|v| want_f64(&mut cx, "noise.eta", v, d.eta))
                .unwrap_or(d.eta);
            s.finish(&mut cx, &["eta"]);
            eta
        }
        None => d.eta,
    };

    let shots_per_evaluation = match root.sub(&mut cx, "sampling") {
        Some(m) => {
            let mut s = Section::new("sampling", m);
            let shots = s
                .take("shots_per_evaluation")
                .map(|v| want_u64(&mut cx, "sampling.shots_per_evaluation", v, d.shots_per_evaluation))
                .unwrap_or(d.shots_per_evaluation);
            s.finish(&mut cx, &["shots_per_evaluation"]);
            shots
        }
        None => d.shots_per_evaluation,
    };

    let estimator = match root.take("estimator") {
        None => d.estimator,
        Some(v) => match want_string(&mut cx, "estimator", v) {
            Some(s) => match s.as_str() {
                "lossless" => EstimatorKind::Lossless,
                "postselect" => EstimatorKind::Postselect,
                "recycled_mitigated" => EstimatorKind::RecycledMitigated,
                other => {
                    cx.push(
                        "estimator",
                        format!(
                            "unknown estimator {other:?} (expected lossless, postselect or recycled_mitigated)"
                        ),
                    );
                    d.estimator
                }
            },
            None => d.estimator,
        },
    };

    let target = match root.sub(&mut cx, "target") {
        Some(m) => parse_target(&mut cx, m),
        None => d.target.clone(),
    };

    let metric = match root.take("metric") {
        None => d.metric,
        Some(v) => match want_string(&mut cx, "metric", v) {
            Some(s) => match s.as_str() {
                "kl" => Metric::Kl,
                "tvd" => Metric::Tvd,
                other => {
                    cx.push("metric", format!("unknown metric {other:?} (expected kl or tvd)"));
                    d.metric
                }
            },
            None => d.metric,
        },
    };

    let spsa = match root.sub(&mut cx, "spsa") {
        Some(m) => parse_spsa(&mut cx, m),
        None => d.spsa.clone(),
    };

    let bench = match root.sub(&mut cx, "bench") {
        Some(m) => {
            let mut s = Section::new("bench", m);
            let seeds = s
                .take("seeds")
                .map(|v| want_usize(&mut cx, "bench.seeds", v, d.bench.seeds))
                .unwrap_or(d.bench.seeds);
            s.finish(&mut cx, &["seeds"]);
            if seeds == 0 {
                cx.push("bench.seeds", "the ensemble needs at least one seed");
            }
            BenchConfig { seeds }
        }
        None => d.bench,
    };

    let seed = root
        .take("seed")
        .map(|v| want_u64(&mut cx, "seed", v, d.seed))
        .unwrap_or(d.seed);

    let output_dir = match root.sub(&mut cx, "output") {
        Some(m) => {
            let mut s = Section::new("output", m);
            let dir = s
                .take("dir")
                .and_then(|v| want_string(&mut cx, "output.dir", v))
                .unwrap_or_else(|| d.output_dir.clone());
            s.finish(&mut cx, &["dir"]);
            dir
        }
        None => d.output_dir.clone(),
    };

    root.finish(
        &mut cx,
        &[
            "mode",
            "circuit",
            "noise",
            "sampling",
            "estimator",
            "target",
            "metric",
            "spsa",
            "bench",
            "seed",
            "output",
        ],
    );

    // Cross-field rules.
    if !(0.0..=1.0).contains(&eta) || !eta.is_finite() {
        cx.push("noise.eta", "the loss probability must lie in [0, 1]");
    }
    if estimator == EstimatorKind::Lossless && eta > 0.0 {
        cx.push(
            "estimator",
            "the lossless estimator needs noise.eta = 0; pick postselect or recycled_mitigated",
        );
    }
    if estimator != EstimatorKind::Lossless && shots_per_evaluation == 0 {
        cx.push(
            "sampling.shots_per_evaluation",
            "sampled estimators need a positive shot budget",
        );
    }
    if circuit.input_occupations.is_none() && 2 * circuit.n as usize > circuit.m + 1 {
        cx.push(
            "circuit.input_occupations",
            format!(
                "the alternating default needs 2n <= m + 1 (n = {}, m = {}); list the occupations explicitly",
                circuit.n, circuit.m
            ),
        );
    }

    cx.finish()?;
    Ok(RunConfig {
        mode,
        circuit,
        eta,
        shots_per_evaluation,
        estimator,
        target,
        metric,
        spsa,
        bench,
        seed,
        output_dir,
    })
}

/// Whether the document itself names a mode (as opposed to relying on
/// the default); the binary uses this to detect subcommand mismatches.
pub fn names_mode(text: &str) -> bool {
    serde_json::from_str::<Value>(text)
        .ok()
        .and_then(|v| v.get("mode").map(|m| !m.is_null()))
        .unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default_config() {
        let cfg = parse_config("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn resolved_document_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.mode = RunMode::Train;
        cfg.eta = 0.7;
        cfg.estimator = EstimatorKind::Postselect;
        cfg.seed = 42;
        cfg.circuit.input_occupations = Some(vec![1, 0, 1, 0, 1, 0, 0, 0]);
        let text = serde_json::to_string(&cfg.to_json()).unwrap();
        let back = parse_config(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn returns_target_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.target = TargetConfig::ReturnsCsv {
            path: "data/returns.csv".into(),
            bins: 30,
            clip_lo: 0.02,
            clip_hi: 0.98,
        };
        cfg.metric = Metric::Tvd;
        let text = serde_json::to_string(&cfg.to_json()).unwrap();
        assert_eq!(parse_config(&text).unwrap(), cfg);
    }

    #[test]
    fn photon_sum_mismatch_names_the_field() {
        let err = parse_config(
            r#"{"circuit": {"m": 4, "n": 3, "input_occupations": [1, 0, 1, 0]}}"#,
        )
        .unwrap_err();
        assert_eq!(err.problems.len(), 1);
        assert!(err.problems[0].starts_with("circuit.input_occupations:"));
        assert!(err.problems[0].contains("sum to 2"), "{}", err.problems[0]);
    }

    #[test]
    fn all_problems_come_back_at_once() {
        let err = parse_config(
            r#"{
                "circuit": {"m": 1, "n": 0, "typo": true},
                "noise": {"eta": 1.5},
                "metric": "l2",
                "extra": {}
            }"#,
        )
        .unwrap_err();
        let text = err.problems.join("\n");
        for needle in [
            "circuit.m:",
            "circuit.n:",
            "circuit.typo: unknown key",
            "noise.eta:",
            "metric: unknown metric",
            "extra: unknown key",
        ] {
            assert!(text.contains(needle), "missing {needle} in:\n{text}");
        }
    }

    #[test]
    fn large_circuit_preset_is_accepted() {
        // The flagship run scale: 12 modes, 4 photons, eta 0.8, 200000
        // shots per evaluation.
        let cfg = parse_config(
            r#"{
                "mode": "train",
                "circuit": {"m": 12, "n": 4},
                "noise": {"eta": 0.8},
                "sampling": {"shots_per_evaluation": 200000},
                "estimator": "recycled_mitigated"
            }"#,
        )
        .unwrap();
        assert_eq!(cfg.mode, RunMode::Train);
        assert_eq!((cfg.circuit.m, cfg.circuit.n), (12, 4));
        assert_eq!(cfg.eta, 0.8);
        assert_eq!(cfg.shots_per_evaluation, 200_000);
    }

    #[test]
    fn lossless_estimator_with_loss_is_rejected() {
        let err =
            parse_config(r#"{"noise": {"eta": 0.5}, "estimator": "lossless"}"#).unwrap_err();
        assert!(err.problems[0].starts_with("estimator:"), "{err}");
    }

    #[test]
    fn alternating_default_needs_room() {
        let err = parse_config(r#"{"circuit": {"m": 3, "n": 3}}"#).unwrap_err();
        assert!(
            err.problems
                .iter()
                .any(|p| p.contains("list the occupations explicitly")),
            "{err}"
        );
    }

    #[test]
    fn spsa_seed_is_not_a_key() {
        let err = parse_config(r#"{"spsa": {"seed": 3}}"#).unwrap_err();
        assert!(err.problems[0].contains("spsa.seed: unknown key"), "{err}");
    }

    #[test]
    fn phase_vector_length_is_checked() {
        let err = parse_config(r#"{"circuit": {"m": 4, "n": 2, "phases": [0.0, 0.0]}}"#)
            .unwrap_err();
        assert!(err.problems[0].contains("circuit.phases:"), "{err}");
        assert!(err.problems[0].contains("12"), "{err}");
    }

    #[test]
    fn mode_detection_sees_through_defaults() {
        assert!(names_mode(r#"{"mode": "train"}"#));
        assert!(!names_mode("{}"));
        assert!(!names_mode(r#"{"mode": null}"#));
    }
}
