//! Experiment specs: a flat JSON object in, a fully resolved [`ExperimentSpec`] out.
//!
//! Every key is optional except where a kind needs it; missing keys take
//! the defaults documented on [`ExperimentSpec`]. Errors name the offending
//! key (`batch[2]: …`). Writing a resolved spec with [`ExperimentSpec::to_json`]
//! and parsing it back yields the same spec.

use std::fmt;
use std::path::{Path, PathBuf};

use serde_json::{Map, Number, Value};
use tailgate_core::ensemble::Axis;
use tailgate_core::gate::{Predictor, Variant};

/// Error while reading or validating a spec.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    /// File could not be read.
    #[error("cannot read {path}: {source}")]
    Io {
        /// File path.
        path: PathBuf,
        /// Cause.
        source: std::io::Error,
    },
    /// Not a JSON object.
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    /// Key not in the schema.
    #[error("{key}: unknown key")]
    UnknownKey {
        /// Offending key.
        key: String,
    },
    /// Key required by this kind is absent.
    #[error("{key}: missing required field")]
    Missing {
        /// Required key.
        key: &'static str,
    },
    /// Value present but invalid.
    #[error("{key}: {reason}")]
    Invalid {
        /// Key path, e.g. `batch[1]`.
        key: String,
        /// Violated constraint.
        reason: String,
    },
}

fn invalid(key: impl Into<String>, reason: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        reason: reason.to_string(),
    }
}

/// What an experiment does; one per CLI subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Hill estimator against stable samplers.
    ValidateEstimator,
    /// Realizable ensembles along one axis.
    RealizableSweep,
    /// Mixture-classification ensembles along one axis.
    ClassificationSweep,
    /// One training run with its diagnostic traces.
    SingleRun,
    /// Strict-stability KS check of the sampler.
    StabilityCheck,
}

impl Kind {
    /// All kinds.
    pub const ALL: [Kind; 5] = [
        Kind::ValidateEstimator,
        Kind::RealizableSweep,
        Kind::ClassificationSweep,
        Kind::SingleRun,
        Kind::StabilityCheck,
    ];

    /// Name used in files and as subcommand.
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::ValidateEstimator => "validate-estimator",
            Kind::RealizableSweep => "realizable-sweep",
            Kind::ClassificationSweep => "classification-sweep",
            Kind::SingleRun => "single-run",
            Kind::StabilityCheck => "stability-check",
        }
    }

    fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

/// Task used by `single-run`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    /// Teacher-labelled regression.
    Realizable,
    /// Gaussian-mixture classification.
    Mixture,
}

impl TaskKind {
    fn as_str(&self) -> &'static str {
        match self {
            TaskKind::Realizable => "realizable",
            TaskKind::Mixture => "mixture",
        }
    }
}

/// A validated experiment.
///
/// Defaults: `k1 = k2 = 25` for realizable sweeps, 10 for classification
/// sweeps, 100 for `validate-estimator`; `iters = 8000`; `tail_window =
/// 1000` (realizable) or 500 (mixture); `seed = 0`; `variant = sgd`;
/// `convergence_gate = 1e-5`; `saturation_gate = 0.05`; Gaussian inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    /// Experiment name.
    pub name: String,
    /// What to run.
    pub kind: Kind,
    /// CSV output path.
    pub out: PathBuf,
    /// Master seed.
    pub seed: u64,
    /// Hill block length.
    pub k1: usize,
    /// Hill block count.
    pub k2: usize,
    /// Swept axis (sweeps only).
    pub axis: Axis,
    /// Input dimensions.
    pub dims: Vec<usize>,
    /// Mini-batch sizes.
    pub batch: Vec<usize>,
    /// Step lengths.
    pub eta: Vec<f64>,
    /// Gradient rule.
    pub variant: Variant,
    /// Iterates per run.
    pub iters: usize,
    /// Iterates averaged at the end.
    pub tail_window: usize,
    /// Diagnostic stride.
    pub trace_stride: usize,
    /// Monte-Carlo draws per classification checkpoint.
    pub eval_samples: usize,
    /// Classification decision rule.
    pub predictor: Predictor,
    /// Recovery-error gate; `None` disables.
    pub convergence_gate: Option<f64>,
    /// Classification saturation gate; `None` disables.
    pub saturation_gate: Option<f64>,
    /// Task of `single-run`.
    pub task: TaskKind,
    /// Standard deviation of mixture class 0.
    pub mixture_sigma0: f64,
    /// Standard deviation of mixture class 1.
    pub mixture_sigma1: f64,
    /// Norm of the mixture mean `μ` (direction `(1, …, 1)/√d`).
    pub mixture_mean_norm: f64,
    /// Stability indices for `validate-estimator` / `stability-check`.
    pub alphas: Vec<f64>,
    /// Samples per draw set.
    pub samples: usize,
    /// Seeded repetitions per α in `validate-estimator`.
    pub reps: usize,
    /// Group sizes `m` for `stability-check`.
    pub groups: Vec<usize>,
}

const KEYS: &[&str] = &[
    "name",
    "kind",
    "out",
    "seed",
    "k1",
    "k2",
    "axis",
    "dims",
    "batch",
    "eta",
    "variant",
    "iters",
    "tail_window",
    "trace_stride",
    "eval_samples",
    "predictor",
    "convergence_gate",
    "saturation_gate",
    "task",
    "mixture_sigma0",
    "mixture_sigma1",
    "mixture_mean_norm",
    "alphas",
    "samples",
    "reps",
    "groups",
];

struct Fields {
    map: Map<String, Value>,
}

impl Fields {
    fn string(&self, key: &'static str) -> Result<Option<String>, ConfigError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(invalid(key, "expected a string")),
        }
    }

    fn float_at(key: String, v: &Value) -> Result<f64, ConfigError> {
        v.as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| invalid(key, "expected a finite number"))
    }

    fn uint_at(key: String, v: &Value) -> Result<u64, ConfigError> {
        if let Some(u) = v.as_u64() {
            return Ok(u);
        }
        match v.as_f64() {
            Some(x) if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(53) => Ok(x as u64),
            _ => Err(invalid(key, "expected a non-negative integer")),
        }
    }

    fn float(&self, key: &'static str) -> Result<Option<f64>, ConfigError> {
        self.map
            .get(key)
            .map(|v| Self::float_at(key.to_string(), v))
            .transpose()
    }

    fn uint(&self, key: &'static str) -> Result<Option<u64>, ConfigError> {
        self.map
            .get(key)
            .map(|v| Self::uint_at(key.to_string(), v))
            .transpose()
    }

    fn usize(&self, key: &'static str, min: usize) -> Result<Option<usize>, ConfigError> {
        match self.uint(key)? {
            None => Ok(None),
            Some(v) if (v as usize) < min => Err(invalid(key, format!("must be at least {min} (got {v})"))),
            Some(v) => Ok(Some(v as usize)),
        }
    }

    /// Number or list of numbers.
    fn list<T>(
        &self,
        key: &'static str,
        item: impl Fn(String, &Value) -> Result<T, ConfigError>,
    ) -> Result<Option<Vec<T>>, ConfigError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(Value::Array(items)) => {
                if items.is_empty() {
                    return Err(invalid(key, "list must not be empty"));
                }
                items
                    .iter()
                    .enumerate()
                    .map(|(i, v)| item(format!("{key}[{i}]"), v))
                    .collect::<Result<Vec<_>, _>>()
                    .map(Some)
            }
            Some(v) => item(key.to_string(), v).map(|x| Some(vec![x])),
        }
    }

    fn gate(&self, key: &'static str, default: f64) -> Result<Option<f64>, ConfigError> {
        match self.map.get(key) {
            None => Ok(Some(default)),
            Some(Value::Null) => Ok(None),
            Some(v) => {
                let g = Self::float_at(key.to_string(), v)?;
                if g > 0.0 {
                    Ok(Some(g))
                } else {
                    Err(invalid(key, "must be positive or null"))
                }
            }
        }
    }
}

fn positive_int(key: String, v: &Value) -> Result<usize, ConfigError> {
    let u = Fields::uint_at(key.clone(), v)?;
    if u < 1 {
        return Err(invalid(key, "must be a positive integer"));
    }
    Ok(u as usize)
}

fn step_length(key: String, v: &Value) -> Result<f64, ConfigError> {
    let x = Fields::float_at(key.clone(), v)?;
    if x < 0.0 {
        return Err(invalid(key, "must be non-negative"));
    }
    Ok(x)
}

fn stability_index(key: String, v: &Value) -> Result<f64, ConfigError> {
    let x = Fields::float_at(key.clone(), v)?;
    if !(x > 0.0 && x <= 2.0) {
        return Err(invalid(key, "must lie in (0, 2]"));
    }
    Ok(x)
}

fn strictly_increasing<T: PartialOrd + Copy>(key: &'static str, xs: &[T]) -> Result<(), ConfigError> {
    if xs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid(key, "values must be strictly increasing"));
    }
    Ok(())
}

fn axis_key(axis: Axis) -> &'static str {
    match axis {
        Axis::Dimension => "dims",
        Axis::Batch => "batch",
        Axis::Eta => "eta",
    }
}

impl ExperimentSpec {
    /// Parse a JSON document. `default_name` fills a missing `name`;
    /// `default_kind` fills a missing `kind` (otherwise `realizable-sweep`).
    pub fn from_json(text: &str, default_name: &str, default_kind: Option<Kind>) -> Result<Self, ConfigError> {
        let map = match serde_json::from_str::<Value>(text)? {
            Value::Object(map) => map,
            _ => return Err(invalid("<root>", "expected a JSON object")),
        };
        if let Some(key) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(ConfigError::UnknownKey { key: key.clone() });
        }
        Self::from_fields(Fields { map }, default_name, default_kind)
    }

    fn from_fields(f: Fields, default_name: &str, default_kind: Option<Kind>) -> Result<Self, ConfigError> {
        let kind = match f.string("kind")? {
            Some(s) => Kind::parse(&s).ok_or_else(|| {
                let names: Vec<&str> = Kind::ALL.iter().map(Kind::as_str).collect();
                invalid("kind", format!("expected one of {}", names.join(", ")))
            })?,
            None => default_kind.unwrap_or(Kind::RealizableSweep),
        };
        let name = f.string("name")?.unwrap_or_else(|| default_name.to_string());
        if name.is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        let out = f
            .string("out")?
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(format!("{name}.csv")));
        if out.as_os_str().is_empty() {
            return Err(invalid("out", "must not be empty"));
        }

        let task = match f.string("task")?.as_deref() {
            None | Some("realizable") => TaskKind::Realizable,
            Some("mixture") => TaskKind::Mixture,
            Some(_) => return Err(invalid("task", "expected realizable or mixture")),
        };
        let mixture = kind == Kind::ClassificationSweep || (kind == Kind::SingleRun && task == TaskKind::Mixture);

        let default_k = match kind {
            Kind::ValidateEstimator => 100,
            Kind::ClassificationSweep => 10,
            _ => 25,
        };
        let k1 = f.usize("k1", 2)?.unwrap_or(default_k);
        let k2 = f.usize("k2", 1)?.unwrap_or(default_k);

        let dims = f.list("dims", positive_int)?;
        let batch = f.list("batch", positive_int)?;
        let eta = f.list("eta", step_length)?;
        if kind == Kind::RealizableSweep {
            for (key, present) in [("dims", dims.is_some()), ("batch", batch.is_some()), ("eta", eta.is_some())] {
                if !present {
                    return Err(ConfigError::Missing { key });
                }
            }
        }
        let dims = dims.unwrap_or_else(|| vec![if mixture { 8 } else { 100 }]);
        let batch = batch.unwrap_or_else(|| vec![if mixture { 10 } else { 32 }]);
        let eta = eta.unwrap_or_else(|| vec![0.005]);

        let multi: Vec<Axis> = [(Axis::Dimension, dims.len()), (Axis::Batch, batch.len()), (Axis::Eta, eta.len())]
            .into_iter()
            .filter(|&(_, n)| n > 1)
            .map(|(a, _)| a)
            .collect();
        let axis = match f.string("axis")?.as_deref() {
            Some("dim") => Axis::Dimension,
            Some("batch") => Axis::Batch,
            Some("eta") => Axis::Eta,
            Some(_) => return Err(invalid("axis", "expected dim, batch or eta")),
            None => match multi.as_slice() {
                [] => Axis::Dimension,
                [a] => *a,
                _ => return Err(invalid("axis", "several of dims, batch, eta have more than one value; name the swept one")),
            },
        };
        if let Some(other) = multi.iter().find(|&&a| a != axis) {
            return Err(invalid(axis_key(*other), "only the swept axis may list several values"));
        }
        match axis {
            Axis::Dimension => strictly_increasing("dims", &dims)?,
            Axis::Batch => strictly_increasing("batch", &batch)?,
            Axis::Eta => strictly_increasing("eta", &eta)?,
        }

        let variant = match f.string("variant")?.as_deref() {
            None | Some("sgd") => Variant::Sgd,
            Some("alg1") => Variant::Alg1,
            Some(_) => return Err(invalid("variant", "expected sgd or alg1")),
        };
        if kind == Kind::ClassificationSweep && variant != Variant::Sgd {
            return Err(invalid("variant", "classification sweeps run sgd only"));
        }
        let predictor = match f.string("predictor")?.as_deref() {
            None | Some("preactivation") => Predictor::Preactivation,
            Some("literal-relu") => Predictor::LiteralRelu,
            Some(_) => return Err(invalid("predictor", "expected preactivation or literal-relu")),
        };

        let iters = f.usize("iters", 1)?.unwrap_or(8000);
        let tail_window = f.usize("tail_window", 1)?.unwrap_or(if mixture { 500 } else { 1000 });
        if tail_window > iters {
            return Err(invalid("tail_window", format!("must not exceed iters ({iters})")));
        }
        let trace_stride = f.usize("trace_stride", 1)?.unwrap_or(100);
        let eval_samples = f.usize("eval_samples", 1)?.unwrap_or(2000);
        let convergence_gate = f.gate("convergence_gate", 1e-5)?;
        let saturation_gate = f.gate("saturation_gate", 0.05)?;
        if mixture && saturation_gate.is_some() && kind == Kind::ClassificationSweep && iters < 2 * tail_window {
            return Err(invalid("iters", "must be at least twice tail_window for the saturation gate"));
        }

        let positive = |key: &'static str, default: f64| -> Result<f64, ConfigError> {
            match f.float(key)? {
                None => Ok(default),
                Some(x) if x > 0.0 => Ok(x),
                Some(_) => Err(invalid(key, "must be positive")),
            }
        };
        let mixture_sigma0 = positive("mixture_sigma0", 1.0)?;
        let mixture_sigma1 = positive("mixture_sigma1", 2.0)?;
        if mixture_sigma0 == mixture_sigma1 {
            return Err(invalid("mixture_sigma1", "must differ from mixture_sigma0"));
        }
        let mixture_mean_norm = positive("mixture_mean_norm", 1.0)?;

        let alphas = f.list("alphas", stability_index)?.unwrap_or_else(|| vec![1.0, 1.5, 2.0]);
        let groups = f.list("groups", |key, v| {
            let m = positive_int(key.clone(), v)?;
            if m < 2 {
                return Err(invalid(key, "group size must be at least 2"));
            }
            Ok(m)
        })?;
        let groups = groups.unwrap_or_else(|| vec![2, 4, 8]);
        let samples = f
            .usize("samples", 1)?
            .unwrap_or(if kind == Kind::StabilityCheck { 100_000 } else { 10_000 });
        let reps = f.usize("reps", 1)?.unwrap_or(20);
        match kind {
            Kind::ValidateEstimator if samples < k1 * k2 => {
                return Err(invalid("samples", format!("must be at least k1*k2 = {}", k1 * k2)));
            }
            Kind::StabilityCheck => {
                let need = 200 * groups.iter().max().copied().unwrap_or(2);
                if samples < need {
                    return Err(invalid("samples", format!("must be at least 200*max(groups) = {need}")));
                }
            }
            _ => {}
        }
        let seed = f.uint("seed")?.unwrap_or(0);

        Ok(ExperimentSpec {
            name,
            kind,
            out,
            seed,
            k1,
            k2,
            axis,
            dims,
            batch,
            eta,
            variant,
            iters,
            tail_window,
            trace_stride,
            eval_samples,
            predictor,
            convergence_gate,
            saturation_gate,
            task,
            mixture_sigma0,
            mixture_sigma1,
            mixture_mean_norm,
            alphas,
            samples,
            reps,
            groups,
        })
    }

    /// Every field as a flat JSON object, parseable by [`ExperimentSpec::from_json`].
    pub fn to_json(&self) -> Value {
        fn num(x: f64) -> Value {
            Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        fn ints(xs: &[usize]) -> Value {
            Value::Array(xs.iter().map(|&x| Value::from(x as u64)).collect())
        }
        fn floats(xs: &[f64]) -> Value {
            Value::Array(xs.iter().map(|&x| num(x)).collect())
        }
        let gate = |g: Option<f64>| g.map_or(Value::Null, num);
        let mut m = Map::new();
        m.insert("name".into(), Value::from(self.name.clone()));
        m.insert("kind".into(), Value::from(self.kind.as_str()));
        m.insert("out".into(), Value::from(self.out.to_string_lossy().into_owned()));
        m.insert("seed".into(), Value::from(self.seed));
        m.insert("k1".into(), Value::from(self.k1 as u64));
        m.insert("k2".into(), Value::from(self.k2 as u64));
        m.insert("axis".into(), Value::from(self.axis.as_str()));
        m.insert("dims".into(), ints(&self.dims));
        m.insert("batch".into(), ints(&self.batch));
        m.insert("eta".into(), floats(&self.eta));
        m.insert("variant".into(), Value::from(self.variant.as_str()));
        m.insert("iters".into(), Value::from(self.iters as u64));
        m.insert("tail_window".into(), Value::from(self.tail_window as u64));
        m.insert("trace_stride".into(), Value::from(self.trace_stride as u64));
        m.insert("eval_samples".into(), Value::from(self.eval_samples as u64));
        m.insert(
            "predictor".into(),
            Value::from(match self.predictor {
                Predictor::Preactivation => "preactivation",
                Predictor::LiteralRelu => "literal-relu",
            }),
        );
        m.insert("convergence_gate".into(), gate(self.convergence_gate));
        m.insert("saturation_gate".into(), gate(self.saturation_gate));
        m.insert("task".into(), Value::from(self.task.as_str()));
        m.insert("mixture_sigma0".into(), num(self.mixture_sigma0));
        m.insert("mixture_sigma1".into(), num(self.mixture_sigma1));
        m.insert("mixture_mean_norm".into(), num(self.mixture_mean_norm));
        m.insert("alphas".into(), floats(&self.alphas));
        m.insert("samples".into(), Value::from(self.samples as u64));
        m.insert("reps".into(), Value::from(self.reps as u64));
        m.insert("groups".into(), ints(&self.groups));
        Value::Object(m)
    }

    /// Fast settings: `k1 = k2 = 10`, and `iters = 4000` wherever no
    /// recovery gate applies (realizable runs keep their iteration count,
    /// which the 1e-5 gate needs at small η).
    pub fn apply_ci_scale(&mut self) {
        self.k1 = 10;
        self.k2 = 10;
        let realizable = match self.kind {
            Kind::RealizableSweep => true,
            Kind::SingleRun => self.task == TaskKind::Realizable,
            _ => false,
        };
        if !realizable && matches!(self.kind, Kind::ClassificationSweep | Kind::SingleRun) {
            self.iters = 4000;
            self.tail_window = self.tail_window.min(self.iters / 2);
        }
        if self.kind == Kind::ValidateEstimator {
            self.samples = self.samples.max(100);
        }
    }

    /// Path of the JSON sidecar next to the CSV output.
    pub fn sidecar_path(&self) -> PathBuf {
        sidecar_for(&self.out)
    }
}

/// `results.csv` → `results.meta.json`.
pub fn sidecar_for(out: &Path) -> PathBuf {
    out.with_extension("meta.json")
}

/// Read and validate a spec file. The file stem names the experiment when
/// `name` is absent.
pub fn parse_config(path: &Path) -> Result<ExperimentSpec, ConfigError> {
    parse_config_as(path, None)
}

/// [`parse_config`] with a kind to assume when the file has none.
pub fn parse_config_as(path: &Path, default_kind: Option<Kind>) -> Result<ExperimentSpec, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .map(|s| s.strip_suffix(".meta").unwrap_or(s))
        .unwrap_or("experiment");
    ExperimentSpec::from_json(&text, stem, default_kind)
}
