//! K1×K2 seeded training runs, the centered tail-average sample, and sweeps.
//!
//! Every run draws from its own Xoshiro256++ stream seeded by
//! [`mix_seed`]`(master_seed, run_index)`, so results do not depend on how
//! runs are scheduled. Results are folded in run-index order.
//!
//! Realizable runs draw a fresh teacher `w_{*,s} ~ N(0, I)` first and the
//! data stream afterwards from the same run stream; the centered sample is
//! `X_s = tail_average_s − w_{*,s}`. Classification runs share one fixed
//! task and are centered at the ensemble mean of the tail averages.
//! All runs start from one shared point drawn from `N(0, I)` under the
//! master seed.

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
/// Generator behind every run stream.
pub use rand_xoshiro::Xoshiro256PlusPlus as RunRng;
use rand_distr::StandardNormal;

use crate::gate::{self, MixtureTask, RealizableTask, RunOutcome, Task, TracePoint, TrainConfig, Variant};
use crate::hill::{hill_alpha, HillConfig, TailIndexEstimate};
use crate::{Error, Result, RunFailure, RunFailureCause, WeightVector};

const RUN_STREAM: u64 = 0x5255_4e53; // "RUNS"
const INIT_STREAM: u64 = 0x494e_4954; // "INIT"
const SWEEP_STREAM: u64 = 0x5357_4550; // "SWEP"

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic 64-bit mix of a seed with a stream tag and an index:
/// `splitmix64(seed ^ splitmix64(stream ^ splitmix64(index)))`.
pub fn mix_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream ^ splitmix64(index)))
}

/// Seed of run `run` under `master_seed`.
pub fn run_seed(master_seed: u64, run: usize) -> u64 {
    mix_seed(master_seed, RUN_STREAM, run as u64)
}

/// Seed of sweep point `point` derived from the base master seed.
pub fn point_seed(master_seed: u64, point: usize) -> u64 {
    mix_seed(master_seed, SWEEP_STREAM, point as u64)
}

/// Maps run indices to results. Implementations must return results in
/// index order.
pub trait Executor: Sync {
    /// `[f(0), f(1), …, f(n−1)]`.
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Executor for Serial {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

/// Task shared by the runs of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub enum TaskTemplate {
    /// Fresh standard Gaussian teacher per run, standard Gaussian inputs.
    Realizable {
        /// Input dimension.
        dim: usize,
    },
    /// One fixed mixture for every run.
    Mixture(MixtureTask),
}

impl TaskTemplate {
    /// Input dimension.
    pub fn dim(&self) -> usize {
        match self {
            TaskTemplate::Realizable { dim } => *dim,
            TaskTemplate::Mixture(m) => m.input_dim(),
        }
    }
}

/// Starting point shared by every run of an ensemble.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitPolicy {
    /// `N(0, I_d)` drawn once under the master seed (see [`shared_init`]).
    #[default]
    SharedGaussian,
    /// This exact vector; its dimension must match the task.
    Fixed(WeightVector),
}

/// Everything that determines an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    /// Runs per Hill block.
    pub k1: usize,
    /// Number of Hill blocks.
    pub k2: usize,
    /// Seed of every random draw in the ensemble.
    pub master_seed: u64,
    /// Per-run training parameters.
    pub train: TrainConfig,
    /// Task construction.
    pub task: TaskTemplate,
    /// Common starting point.
    pub init: InitPolicy,
    /// Realizable runs must end with `‖w_T − w_*‖` below this; `None` disables.
    pub convergence_gate: Option<f64>,
    /// Classification runs must change their error by less than this
    /// fraction between the last two tail windows; `None` disables.
    pub saturation_gate: Option<f64>,
}

impl EnsembleConfig {
    /// Default block counts (25 × 25).
    pub const DEFAULT_K: usize = 25;
    /// Default recovery-error gate.
    pub const DEFAULT_CONVERGENCE_GATE: f64 = 1e-5;
    /// Default relative-change gate for classification traces.
    pub const DEFAULT_SATURATION_GATE: f64 = 0.05;

    /// Realizable ensemble with default block counts and gates.
    pub fn realizable(dim: usize, train: TrainConfig, master_seed: u64) -> Self {
        EnsembleConfig {
            k1: Self::DEFAULT_K,
            k2: Self::DEFAULT_K,
            master_seed,
            train,
            task: TaskTemplate::Realizable { dim },
            init: InitPolicy::SharedGaussian,
            convergence_gate: Some(Self::DEFAULT_CONVERGENCE_GATE),
            saturation_gate: Some(Self::DEFAULT_SATURATION_GATE),
        }
    }

    /// Classification ensemble with default block counts and gates.
    pub fn classification(task: MixtureTask, train: TrainConfig, master_seed: u64) -> Self {
        EnsembleConfig {
            task: TaskTemplate::Mixture(task),
            ..Self::realizable(0, train, master_seed)
        }
    }

    /// Same config with block counts `k × k`.
    pub fn with_blocks(mut self, k1: usize, k2: usize) -> Self {
        self.k1 = k1;
        self.k2 = k2;
        self
    }

    /// Number of runs, `k1·k2`.
    pub fn runs(&self) -> usize {
        self.k1 * self.k2
    }

    fn validate(&self) -> Result<HillConfig> {
        let hill = HillConfig::new(self.k1, self.k2)?;
        self.train.validate()?;
        if self.task.dim() == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        if let InitPolicy::Fixed(w) = &self.init {
            if w.dim() != self.task.dim() {
                return Err(Error::DimensionMismatch {
                    index: 0,
                    expected: self.task.dim(),
                    got: w.dim(),
                });
            }
        }
        if let Some(g) = self.convergence_gate {
            if !(g > 0.0) {
                return Err(Error::invalid("convergence_gate", "must be positive"));
            }
        }
        if let Some(g) = self.saturation_gate {
            if !(g > 0.0) {
                return Err(Error::invalid("saturation_gate", "must be positive"));
            }
        }
        Ok(hill)
    }
}

/// Starting point shared by every run: `N(0, I_d)` drawn under the master seed.
pub fn shared_init(master_seed: u64, dim: usize) -> WeightVector {
    let mut rng = RunRng::seed_from_u64(mix_seed(master_seed, INIT_STREAM, 0));
    gaussian_vector(dim, &mut rng)
}

fn initial_point(cfg: &EnsembleConfig) -> WeightVector {
    match &cfg.init {
        InitPolicy::SharedGaussian => shared_init(cfg.master_seed, cfg.task.dim()),
        InitPolicy::Fixed(w) => w.clone(),
    }
}

fn gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> WeightVector {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Outcome of a successful ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    /// Hill estimate over the centered samples.
    pub estimate: TailIndexEstimate,
    /// `‖X_s‖` for every run, in run order.
    pub per_run_norms: Vec<f64>,
    /// Max final recovery error (realizable) or max final classification
    /// error (mixture) over runs.
    pub convergence: f64,
    /// Max relative change of the classification trace between the last
    /// two tail windows (mixture only; 0 for realizable ensembles).
    pub saturation: f64,
}

/// Relative change of the trace mean between the windows `(T−2W, T−W]` and
/// `(T−W, T]`. `None` when either window has no checkpoint.
pub fn trace_relative_change(trace: &[TracePoint], iters: usize, window: usize) -> Option<f64> {
    let mean_in = |lo: usize, hi: usize| {
        let (s, n) = trace
            .iter()
            .filter(|p| p.t > lo && p.t <= hi)
            .fold((0.0, 0usize), |(s, n), p| (s + p.value, n + 1));
        (n > 0).then(|| s / n as f64)
    };
    let last = mean_in(iters.saturating_sub(window), iters)?;
    let prev = mean_in(iters.saturating_sub(2 * window), iters.saturating_sub(window))?;
    if last == prev {
        return Some(0.0);
    }
    Some((last - prev).abs() / prev.abs().max(f64::MIN_POSITIVE))
}

struct RunSample {
    centered: WeightVector,
    final_error: f64,
    saturation: f64,
}

fn collect_runs(
    cfg: &EnsembleConfig,
    results: Vec<core::result::Result<RunSample, RunFailure>>,
) -> Result<Vec<RunSample>> {
    let mut ok = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(s) => ok.push(s),
            Err(f) => failures.push(f),
        }
    }
    if !failures.is_empty() {
        return Err(Error::EnsembleFailed { failures });
    }
    debug_assert_eq!(ok.len(), cfg.runs());
    Ok(ok)
}

fn finish(hill: HillConfig, runs: Vec<RunSample>) -> Result<EnsembleResult> {
    let per_run_norms = runs.iter().map(|r| r.centered.norm()).collect();
    let convergence = runs.iter().map(|r| r.final_error).fold(0.0, f64::max);
    let saturation = runs.iter().map(|r| r.saturation).fold(0.0, f64::max);
    let samples: Vec<WeightVector> = runs.into_iter().map(|r| r.centered).collect();
    Ok(EnsembleResult {
        estimate: hill_alpha(&samples, hill)?,
        per_run_norms,
        convergence,
        saturation,
    })
}

fn diverged(run: usize, e: Error) -> RunFailure {
    match e {
        Error::Diverged { iteration } => RunFailure {
            run,
            cause: RunFailureCause::Diverged { iteration },
        },
        // train_run only fails on divergence once the config is validated.
        other => unreachable!("unexpected training error: {other}"),
    }
}

fn realizable_run(
    cfg: &EnsembleConfig,
    dim: usize,
    init: &[f64],
    run: usize,
) -> Result<(WeightVector, RunOutcome)> {
    let mut rng = RunRng::seed_from_u64(run_seed(cfg.master_seed, run));
    let w_star = gaussian_vector(dim, &mut rng);
    let task = Task::Realizable(RealizableTask::new(w_star.clone())?);
    let out = gate::train_run(&task, &cfg.train, init, &mut rng)?;
    Ok((w_star, out))
}

fn mixture_run(cfg: &EnsembleConfig, task: &Task, init: &[f64], run: usize) -> Result<RunOutcome> {
    let mut rng = RunRng::seed_from_u64(run_seed(cfg.master_seed, run));
    gate::train_run(task, &cfg.train, init, &mut rng)
}

/// Run `run` of the ensemble `cfg` on its own, exactly as the ensemble runs it.
/// Returns the task it trained on (with that run's teacher) and the outcome.
/// Gates are not applied.
pub fn ensemble_run(cfg: &EnsembleConfig, run: usize) -> Result<(Task, RunOutcome)> {
    cfg.validate()?;
    if run >= cfg.runs() {
        return Err(Error::invalid("run", "index beyond k1*k2"));
    }
    let init = initial_point(cfg);
    match &cfg.task {
        TaskTemplate::Realizable { dim } => {
            let (w_star, out) = realizable_run(cfg, *dim, &init, run)?;
            Ok((Task::Realizable(RealizableTask::new(w_star)?), out))
        }
        TaskTemplate::Mixture(m) => {
            let task = Task::Mixture(m.clone());
            let out = mixture_run(cfg, &task, &init, run)?;
            Ok((task, out))
        }
    }
}

/// Realizable ensemble on the calling thread.
pub fn run_realizable_ensemble(cfg: &EnsembleConfig) -> Result<EnsembleResult> {
    run_realizable_ensemble_with(cfg, &Serial)
}

/// Realizable ensemble: fresh teacher per run, centered at that teacher.
pub fn run_realizable_ensemble_with<E: Executor>(cfg: &EnsembleConfig, exec: &E) -> Result<EnsembleResult> {
    let hill = cfg.validate()?;
    let TaskTemplate::Realizable { dim } = cfg.task else {
        return Err(Error::invalid("task", "realizable ensemble needs a realizable task"));
    };
    let init = initial_point(cfg);

    let results = exec.map(cfg.runs(), |run| {
        let (w_star, out) = realizable_run(cfg, dim, &init, run).map_err(|e| diverged(run, e))?;
        let final_error = out.final_w.distance(&w_star);
        if let Some(gate) = cfg.convergence_gate {
            if !(final_error < gate) {
                return Err(RunFailure {
                    run,
                    cause: RunFailureCause::NotConverged {
                        error: final_error,
                        gate,
                    },
                });
            }
        }
        Ok(RunSample {
            centered: out.tail_average.sub(&w_star),
            final_error,
            saturation: 0.0,
        })
    });
    finish(hill, collect_runs(cfg, results)?)
}

/// Classification ensemble on the calling thread.
pub fn run_classification_ensemble(cfg: &EnsembleConfig) -> Result<EnsembleResult> {
    run_classification_ensemble_with(cfg, &Serial)
}

/// Classification ensemble: one fixed mixture, SGD only, centered at the
/// ensemble mean of the tail averages.
pub fn run_classification_ensemble_with<E: Executor>(cfg: &EnsembleConfig, exec: &E) -> Result<EnsembleResult> {
    let hill = cfg.validate()?;
    let TaskTemplate::Mixture(ref mixture) = cfg.task else {
        return Err(Error::invalid("task", "classification ensemble needs a mixture task"));
    };
    if cfg.train.variant != Variant::Sgd {
        return Err(Error::invalid("variant", "classification ensembles run SGD only"));
    }
    if cfg.saturation_gate.is_some() && cfg.train.iters < 2 * cfg.train.tail_window {
        return Err(Error::invalid(
            "iters",
            "must be at least twice tail_window for the saturation gate",
        ));
    }
    let task = Task::Mixture(mixture.clone());
    let init = initial_point(cfg);

    let results = exec.map(cfg.runs(), |run| {
        let out = mixture_run(cfg, &task, &init, run).map_err(|e| diverged(run, e))?;
        let saturation = trace_relative_change(
            &out.classification_trace,
            cfg.train.iters,
            cfg.train.tail_window,
        )
        .unwrap_or(0.0);
        if let Some(gate) = cfg.saturation_gate {
            if !(saturation < gate) {
                return Err(RunFailure {
                    run,
                    cause: RunFailureCause::NotSaturated {
                        relative_change: saturation,
                        gate,
                    },
                });
            }
        }
        let final_error = out.classification_trace.last().map_or(0.0, |p| p.value);
        Ok(RunSample {
            centered: out.tail_average,
            final_error,
            saturation,
        })
    });
    let mut runs = collect_runs(cfg, results)?;

    let mut mean = WeightVector::zeros(mixture.input_dim());
    for r in &runs {
        mean.iter_mut().zip(r.centered.iter()).for_each(|(m, v)| *m += v);
    }
    let inv_n = 1.0 / runs.len() as f64;
    mean.iter_mut().for_each(|m| *m *= inv_n);
    for r in &mut runs {
        r.centered = r.centered.sub(&mean);
    }
    finish(hill, runs)
}

/// Dispatch on the task template.
pub fn run_ensemble_with<E: Executor>(cfg: &EnsembleConfig, exec: &E) -> Result<EnsembleResult> {
    match cfg.task {
        TaskTemplate::Realizable { .. } => run_realizable_ensemble_with(cfg, exec),
        TaskTemplate::Mixture(_) => run_classification_ensemble_with(cfg, exec),
    }
}

/// Swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Input dimension d.
    Dimension,
    /// Mini-batch size b.
    Batch,
    /// Step length η.
    Eta,
}

impl Axis {
    /// Short name used in files: `dim`, `batch`, `eta`.
    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::Dimension => "dim",
            Axis::Batch => "batch",
            Axis::Eta => "eta",
        }
    }
}

/// One point of a sweep with the exact config it ran.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    /// Axis value.
    pub value: f64,
    /// Effective config, including the re-mixed seed.
    pub config: EnsembleConfig,
    /// Ensemble outcome.
    pub result: EnsembleResult,
}

/// Ensembles along one axis, in increasing axis order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSeries {
    /// Swept parameter.
    pub axis: Axis,
    /// Points in axis order.
    pub points: Vec<SweepPoint>,
}

fn integer_value(name: &'static str, v: f64) -> Result<usize> {
    if v >= 1.0 && libm::trunc(v) == v && v <= u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::invalid(name, "sweep values must be positive integers"))
    }
}

/// Config of the `index`-th sweep point at `value`.
pub fn point_config(base: &EnsembleConfig, axis: Axis, index: usize, value: f64) -> Result<EnsembleConfig> {
    let mut cfg = base.clone();
    cfg.master_seed = point_seed(base.master_seed, index);
    match axis {
        Axis::Dimension => {
            let dim = integer_value("dim", value)?;
            if matches!(base.init, InitPolicy::Fixed(_)) {
                return Err(Error::invalid("init", "a fixed start cannot follow a dimension sweep"));
            }
            cfg.task = match &base.task {
                TaskTemplate::Realizable { .. } => TaskTemplate::Realizable { dim },
                TaskTemplate::Mixture(m) => {
                    let c = m.mean().norm() / crate::math::sqrt(dim as f64);
                    TaskTemplate::Mixture(MixtureTask::new(
                        WeightVector::from(alloc::vec![c; dim]),
                        m.sigma0(),
                        m.sigma1(),
                    )?)
                }
            };
        }
        Axis::Batch => cfg.train.batch = integer_value("batch", value)?,
        Axis::Eta => {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::invalid("eta", "sweep values must be finite and non-negative"));
            }
            cfg.train.eta = value;
        }
    }
    Ok(cfg)
}

/// Run one ensemble per value; each point gets its own re-mixed seed.
pub fn sweep<E: Executor>(base: &EnsembleConfig, axis: Axis, values: &[f64], exec: &E) -> Result<SweepSeries> {
    if values.is_empty() {
        return Err(Error::invalid("values", "sweep needs at least one value"));
    }
    if values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("values", "must be strictly increasing"));
    }
    let configs = values
        .iter()
        .enumerate()
        .map(|(i, &v)| point_config(base, axis, i, v))
        .collect::<Result<Vec<_>>>()?;

    let mut points = Vec::with_capacity(values.len());
    for (config, &value) in configs.into_iter().zip(values) {
        let result = run_ensemble_with(&config, exec).map_err(|e| Error::SweepPointFailed {
            axis: axis.as_str(),
            value,
            cause: Box::new(e),
        })?;
        points.push(SweepPoint { value, config, result });
    }
    Ok(SweepSeries { axis, points })
}
