//! Turns an [`ExperimentSpec`] into core calls and writes the results.

use std::io;
use std::path::Path;

use rand::SeedableRng;
use tailgate_core::ensemble::{
    self, ensemble_run, mix_seed, EnsembleConfig, Executor, RunRng, SweepSeries,
};
use tailgate_core::gate::{MixtureTask, RunOutcome, TrainConfig};
use tailgate_core::hill::{hill_alpha_scalar, hill_inverse_alpha_scalar, HillConfig};
use tailgate_core::stable::{self, StableParams};
use tailgate_core::{ks, WeightVector};

use crate::config::{ExperimentSpec, Kind, TaskKind};
use crate::output::{emit_series, fmt_f64, write_csv, write_sidecar};

const ESTIMATOR_STREAM: u64 = 0x4849_4c4c; // "HILL"
const STABILITY_STREAM: u64 = 0x5354_4142; // "STAB"

/// Header of the `validate-estimator` CSV.
pub const ESTIMATOR_HEADER: [&str; 8] =
    ["alpha_true", "rep", "alpha", "inv_alpha", "k1", "k2", "n_used", "seed"];
/// Header of the `stability-check` CSV.
pub const STABILITY_HEADER: [&str; 8] = [
    "alpha",
    "m",
    "groups",
    "statistic",
    "critical_value_1pct",
    "control_alpha",
    "control_statistic",
    "seed",
];
/// Header of the `single-run` trace CSV.
pub const TRACE_HEADER: [&str; 3] = ["t", "recovery_error", "classification_error"];

/// Failure of an experiment.
#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    /// The core rejected the configuration or a run failed.
    #[error(transparent)]
    Core(#[from] tailgate_core::Error),
    /// Output could not be written.
    #[error("writing output: {0}")]
    Io(#[from] io::Error),
}

/// One Hill estimate against a known stability index.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorRow {
    /// True α of the sampler.
    pub alpha_true: f64,
    /// Repetition index.
    pub rep: usize,
    /// Estimated 1/α (never clamped).
    pub inv_alpha: f64,
    /// `1/inv_alpha`, NaN when `inv_alpha <= 0`.
    pub alpha: f64,
    /// Hill layout.
    pub k1: usize,
    /// Hill layout.
    pub k2: usize,
    /// Seed of the draws.
    pub seed: u64,
}

/// One strict-stability KS check.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    /// α of the sampler and of the scaling.
    pub alpha: f64,
    /// Group size.
    pub m: usize,
    /// Compared sample size on each side.
    pub groups: usize,
    /// KS statistic with the matching scaling.
    pub statistic: f64,
    /// 1% critical value.
    pub critical_value: f64,
    /// Deliberately wrong α used as control.
    pub control_alpha: f64,
    /// KS statistic with the wrong scaling.
    pub control_statistic: f64,
    /// Seed of the draws.
    pub seed: u64,
}

/// What an experiment produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    /// Ensembles along one axis.
    Sweep(SweepSeries),
    /// Estimator ground-truth rows.
    Estimator(Vec<EstimatorRow>),
    /// Stability checks.
    Stability(Vec<StabilityRow>),
    /// One training run.
    SingleRun(RunOutcome),
}

fn train_config(spec: &ExperimentSpec, eta: f64, batch: usize) -> TrainConfig {
    TrainConfig {
        trace_stride: spec.trace_stride,
        eval_samples: spec.eval_samples,
        predictor: spec.predictor,
        ..TrainConfig::new(eta, batch, spec.iters, spec.tail_window, spec.variant)
    }
}

fn mixture_task(spec: &ExperimentSpec, dim: usize) -> Result<MixtureTask, tailgate_core::Error> {
    let c = spec.mixture_mean_norm / (dim as f64).sqrt();
    MixtureTask::new(WeightVector::from(vec![c; dim]), spec.mixture_sigma0, spec.mixture_sigma1)
}

/// Ensemble config of the first point of a sweep spec.
pub fn base_ensemble(spec: &ExperimentSpec) -> Result<EnsembleConfig, tailgate_core::Error> {
    let train = train_config(spec, spec.eta[0], spec.batch[0]);
    let dim = spec.dims[0];
    let mixture = spec.kind == Kind::ClassificationSweep
        || (spec.kind == Kind::SingleRun && spec.task == TaskKind::Mixture);
    let mut cfg = if mixture {
        EnsembleConfig::classification(mixture_task(spec, dim)?, train, spec.seed)
    } else {
        EnsembleConfig::realizable(dim, train, spec.seed)
    };
    cfg.k1 = spec.k1;
    cfg.k2 = spec.k2;
    cfg.convergence_gate = spec.convergence_gate;
    cfg.saturation_gate = spec.saturation_gate;
    Ok(cfg)
}

/// Values of the swept axis, as reals.
pub fn axis_values(spec: &ExperimentSpec) -> Vec<f64> {
    match spec.axis {
        ensemble::Axis::Dimension => spec.dims.iter().map(|&d| d as f64).collect(),
        ensemble::Axis::Batch => spec.batch.iter().map(|&b| b as f64).collect(),
        ensemble::Axis::Eta => spec.eta.clone(),
    }
}

/// Estimator ground truth: `reps` seeded sets of `samples` SαS(1) draws per α.
pub fn validate_estimator(spec: &ExperimentSpec) -> Result<Vec<EstimatorRow>, tailgate_core::Error> {
    let hill = HillConfig::new(spec.k1, spec.k2)?;
    let mut rows = Vec::new();
    for (ai, &alpha) in spec.alphas.iter().enumerate() {
        let params = StableParams::new(alpha, 1.0)?;
        for rep in 0..spec.reps {
            let seed = mix_seed(spec.seed, ESTIMATOR_STREAM, (ai * spec.reps + rep) as u64);
            let mut rng = RunRng::seed_from_u64(seed);
            let xs: Vec<f64> = (0..spec.samples).map(|_| stable::sample_sas(params, &mut rng)).collect();
            let inv_alpha = hill_inverse_alpha_scalar(&xs, hill)?;
            let alpha = match hill_alpha_scalar(&xs, hill) {
                Ok(est) => est.alpha,
                Err(tailgate_core::Error::NonPositiveInverse { .. }) => f64::NAN,
                Err(e) => return Err(e),
            };
            rows.push(EstimatorRow {
                alpha_true: params.alpha(),
                rep,
                inv_alpha,
                alpha,
                k1: spec.k1,
                k2: spec.k2,
                seed,
            });
        }
    }
    Ok(rows)
}

/// Strict-stability KS checks for every (α, m) pair, with a wrong-α control.
pub fn stability_check(spec: &ExperimentSpec) -> Result<Vec<StabilityRow>, tailgate_core::Error> {
    let mut rows = Vec::new();
    for (ai, &alpha) in spec.alphas.iter().enumerate() {
        let params = StableParams::new(alpha, 1.0)?;
        let seed = mix_seed(spec.seed, STABILITY_STREAM, ai as u64);
        let mut rng = RunRng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..spec.samples).map(|_| stable::sample_sas(params, &mut rng)).collect();
        let control_alpha = if alpha > 1.5 { alpha / 2.0 } else { 2.0 };
        for &m in &spec.groups {
            let statistic = stable::stability_ks_statistic(&xs, m, alpha, &mut rng)?;
            let control_statistic = stable::stability_ks_statistic(&xs, m, control_alpha, &mut rng)?;
            let groups = stable::stability_group_count(xs.len(), m);
            rows.push(StabilityRow {
                alpha,
                m,
                groups,
                statistic,
                critical_value: ks::critical_value(groups, groups, 0.01),
                control_alpha,
                control_statistic,
                seed,
            });
        }
    }
    Ok(rows)
}

/// Run the experiment described by `spec`.
pub fn run_spec<E: Executor>(spec: &ExperimentSpec, exec: &E) -> Result<Report, tailgate_core::Error> {
    match spec.kind {
        Kind::ValidateEstimator => validate_estimator(spec).map(Report::Estimator),
        Kind::StabilityCheck => stability_check(spec).map(Report::Stability),
        Kind::RealizableSweep | Kind::ClassificationSweep => {
            let base = base_ensemble(spec)?;
            ensemble::sweep(&base, spec.axis, &axis_values(spec), exec).map(Report::Sweep)
        }
        Kind::SingleRun => {
            let cfg = base_ensemble(spec)?;
            ensemble_run(&cfg, 0).map(|(_, out)| Report::SingleRun(out))
        }
    }
}

/// Write `report` to `path` as CSV, plus the spec sidecar.
pub fn write_report(report: &Report, spec: &ExperimentSpec, path: &Path) -> io::Result<()> {
    match report {
        Report::Sweep(series) => return emit_series(series, spec, path),
        Report::Estimator(rows) => write_csv(
            path,
            &ESTIMATOR_HEADER,
            rows.iter().map(|r| {
                vec![
                    fmt_f64(r.alpha_true),
                    r.rep.to_string(),
                    fmt_f64(r.alpha),
                    fmt_f64(r.inv_alpha),
                    r.k1.to_string(),
                    r.k2.to_string(),
                    (r.k1 * r.k2).to_string(),
                    r.seed.to_string(),
                ]
            }),
        )?,
        Report::Stability(rows) => write_csv(
            path,
            &STABILITY_HEADER,
            rows.iter().map(|r| {
                vec![
                    fmt_f64(r.alpha),
                    r.m.to_string(),
                    r.groups.to_string(),
                    fmt_f64(r.statistic),
                    fmt_f64(r.critical_value),
                    fmt_f64(r.control_alpha),
                    fmt_f64(r.control_statistic),
                    r.seed.to_string(),
                ]
            }),
        )?,
        Report::SingleRun(out) => {
            let mut ts: Vec<usize> = out
                .recovery_trace
                .iter()
                .chain(&out.classification_trace)
                .map(|p| p.t)
                .collect();
            ts.dedup();
            let find = |trace: &[tailgate_core::gate::TracePoint], t: usize| {
                trace.iter().find(|p| p.t == t).map_or(String::new(), |p| fmt_f64(p.value))
            };
            write_csv(
                path,
                &TRACE_HEADER,
                ts.into_iter().map(|t| {
                    vec![
                        t.to_string(),
                        find(&out.recovery_trace, t),
                        find(&out.classification_trace, t),
                    ]
                }),
            )?
        }
    }
    write_sidecar(spec, path)
}

/// Run and write to `spec.out`.
pub fn execute<E: Executor>(spec: &ExperimentSpec, exec: &E) -> Result<Report, ExperimentError> {
    let report = run_spec(spec, exec)?;
    write_report(&report, spec, &spec.out)?;
    Ok(report)
}

/// One line per sweep point, for the terminal.
pub fn summarize(report: &Report) -> Vec<String> {
    match report {
        Report::Sweep(series) => series
            .points
            .iter()
            .map(|p| {
                format!(
                    "{}={}  alpha={:.4}  1/alpha={:.4}  max_final_error={:.3e}",
                    series.axis.as_str(),
                    p.value,
                    p.result.estimate.alpha,
                    p.result.estimate.inv_alpha,
                    p.result.convergence
                )
            })
            .collect(),
        Report::Estimator(rows) => {
            let mut alphas: Vec<f64> = rows.iter().map(|r| r.alpha_true).collect();
            alphas.dedup();
            alphas
                .into_iter()
                .map(|a| {
                    let ests: Vec<f64> = rows.iter().filter(|r| r.alpha_true == a).map(|r| r.alpha).collect();
                    let mean = ests.iter().sum::<f64>() / ests.len() as f64;
                    format!("alpha={a}  mean estimate={mean:.4} over {} seeds", ests.len())
                })
                .collect()
        }
        Report::Stability(rows) => rows
            .iter()
            .map(|r| {
                format!(
                    "alpha={} m={}  KS={:.4} (1% critical {:.4})  control alpha={} KS={:.4}",
                    r.alpha, r.m, r.statistic, r.critical_value, r.control_alpha, r.control_statistic
                )
            })
            .collect(),
        Report::SingleRun(out) => {
            let mut lines = Vec::new();
            if let Some(p) = out.recovery_trace.last() {
                lines.push(format!("t={}  recovery_error={:.3e}", p.t, p.value));
            }
            if let Some(p) = out.classification_trace.last() {
                lines.push(format!("t={}  classification_error={:.4}", p.t, p.value));
            }
            if out.alg1_on_mixture {
                lines.push("note: alg1 on 0/1 labels only learns from class-1 samples".into());
            }
            lines
        }
    }
}
