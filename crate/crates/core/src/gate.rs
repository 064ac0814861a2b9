//! A single ReLU gate `x ↦ max(0, ⟨w, x⟩)`, its data generators, the two
//! gradient rules and the one-pass training loop.
//!
//! Both rules minimise the ℓ2 risk `½ (y − relu(⟨w, x⟩))²` over fresh
//! mini-batches:
//!
//! ```text
//! Sgd:  g = −(1/b) Σ 1{⟨w, x_i⟩ > 0} (y_i − ⟨w, x_i⟩) x_i
//! Alg1: g = −(1/b) Σ 1{y_i > 0}      (y_i − ⟨w, x_i⟩) x_i
//! ```
//!
//! `Alg1` gates on the teacher's activation instead of the student's, which
//! makes the update linear in `w`.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rand_distr::StandardNormal;

use crate::vector::{dot, norm};
use crate::{Error, Result, WeightVector};

/// `max(0, z)`.
#[inline]
pub fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

/// Law of the inputs `x` in the realizable task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputLaw {
    /// `N(0, I_d)`.
    #[default]
    StandardGaussian,
}

/// Labels produced by a teacher gate: `y = relu(⟨w_star, x⟩)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizableTask {
    w_star: WeightVector,
    input_law: InputLaw,
}

impl RealizableTask {
    /// Teacher `w_star` with standard Gaussian inputs.
    pub fn new(w_star: WeightVector) -> Result<Self> {
        if w_star.dim() == 0 {
            return Err(Error::invalid("w_star", "dimension must be at least 1"));
        }
        Ok(RealizableTask {
            w_star,
            input_law: InputLaw::default(),
        })
    }

    /// Teacher weights.
    pub fn w_star(&self) -> &WeightVector {
        &self.w_star
    }

    /// Input dimension.
    pub fn input_dim(&self) -> usize {
        self.w_star.dim()
    }

    /// Input law.
    pub fn input_law(&self) -> InputLaw {
        self.input_law
    }
}

/// Two isotropic Gaussians at `±mean` chosen by a fair coin; label 1 for `+mean`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureTask {
    mean: WeightVector,
    sigma0: f64,
    sigma1: f64,
}

impl MixtureTask {
    /// Class 1 is `N(mean, sigma1² I)`, class 0 is `N(−mean, sigma0² I)`.
    pub fn new(mean: WeightVector, sigma0: f64, sigma1: f64) -> Result<Self> {
        if mean.dim() == 0 {
            return Err(Error::invalid("mean", "dimension must be at least 1"));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("mean", "components must be finite"));
        }
        for (name, s) in [("sigma0", sigma0), ("sigma1", sigma1)] {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid(name, "must be positive and finite"));
            }
        }
        if sigma0 == sigma1 {
            return Err(Error::invalid("sigma1", "must differ from sigma0"));
        }
        Ok(MixtureTask {
            mean,
            sigma0,
            sigma1,
        })
    }

    /// `mean = (1, …, 1)/√d`, `sigma0 = 1`, `sigma1 = 2`.
    pub fn default_for_dim(dim: usize) -> Result<Self> {
        let c = 1.0 / crate::math::sqrt(dim as f64);
        MixtureTask::new(WeightVector::from(alloc::vec![c; dim]), 1.0, 2.0)
    }

    /// Centre of class 1.
    pub fn mean(&self) -> &WeightVector {
        &self.mean
    }

    /// Standard deviation of class 0.
    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    /// Standard deviation of class 1.
    pub fn sigma1(&self) -> f64 {
        self.sigma1
    }

    /// Input dimension.
    pub fn input_dim(&self) -> usize {
        self.mean.dim()
    }
}

/// Either training task.
#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    /// Teacher-labelled regression.
    Realizable(RealizableTask),
    /// Gaussian-mixture classification with 0/1 labels.
    Mixture(MixtureTask),
}

impl Task {
    /// Input dimension.
    pub fn input_dim(&self) -> usize {
        match self {
            Task::Realizable(t) => t.input_dim(),
            Task::Mixture(t) => t.input_dim(),
        }
    }
}

/// A mini-batch of labelled inputs stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    dim: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Batch {
    /// Empty batch of `dim`-dimensional inputs.
    pub fn new(dim: usize) -> Self {
        Batch {
            dim,
            xs: Vec::new(),
            ys: Vec::new(),
        }
    }

    /// Build from `(x, y)` pairs; all `x` must share one dimension.
    pub fn from_pairs<X: AsRef<[f64]>>(pairs: &[(X, f64)]) -> Result<Self> {
        let dim = pairs.first().map_or(0, |(x, _)| x.as_ref().len());
        let mut batch = Batch::new(dim);
        for (x, y) in pairs {
            batch.push(x.as_ref(), *y)?;
        }
        Ok(batch)
    }

    /// Append one pair.
    pub fn push(&mut self, x: &[f64], y: f64) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                index: self.len(),
                expected: self.dim,
                got: x.len(),
            });
        }
        self.xs.extend_from_slice(x);
        self.ys.push(y);
        Ok(())
    }

    /// Number of pairs.
    pub fn len(&self) -> usize {
        self.ys.len()
    }

    /// True when the batch holds no pairs.
    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    /// Input dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Iterate over `(x, y)`.
    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.xs
            .chunks_exact(self.dim.max(1))
            .zip(self.ys.iter().copied())
    }

    fn clear(&mut self) {
        self.xs.clear();
        self.ys.clear();
    }
}

fn push_gaussian<R: Rng + ?Sized>(out: &mut Vec<f64>, dim: usize, rng: &mut R) {
    out.extend((0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)));
}

fn fill_realizable<R: Rng + ?Sized>(task: &RealizableTask, b: usize, rng: &mut R, batch: &mut Batch) {
    let d = task.input_dim();
    batch.clear();
    for _ in 0..b {
        let start = batch.xs.len();
        match task.input_law {
            InputLaw::StandardGaussian => push_gaussian(&mut batch.xs, d, rng),
        }
        let y = relu(dot(&task.w_star, &batch.xs[start..]));
        batch.ys.push(y);
    }
}

/// `b` fresh pairs `(x, relu(⟨w_star, x⟩))`.
pub fn realizable_batch<R: Rng + ?Sized>(task: &RealizableTask, b: usize, rng: &mut R) -> Batch {
    let mut batch = Batch::new(task.input_dim());
    fill_realizable(task, b, rng, &mut batch);
    batch
}

fn push_mixture<R: Rng + ?Sized>(task: &MixtureTask, rng: &mut R, out: &mut Vec<f64>) -> f64 {
    let class_one = rng.random::<bool>();
    let (sign, sigma) = if class_one {
        (1.0, task.sigma1)
    } else {
        (-1.0, task.sigma0)
    };
    out.extend(
        task.mean
            .iter()
            .map(|m| sign * m + sigma * rng.sample::<f64, _>(StandardNormal)),
    );
    if class_one {
        1.0
    } else {
        0.0
    }
}

fn fill_mixture<R: Rng + ?Sized>(task: &MixtureTask, b: usize, rng: &mut R, batch: &mut Batch) {
    batch.clear();
    for _ in 0..b {
        let y = push_mixture(task, rng, &mut batch.xs);
        batch.ys.push(y);
    }
}

/// One labelled draw from the mixture.
pub fn mixture_sample<R: Rng + ?Sized>(task: &MixtureTask, rng: &mut R) -> (WeightVector, f64) {
    let mut x = Vec::with_capacity(task.input_dim());
    let y = push_mixture(task, rng, &mut x);
    (WeightVector::from(x), y)
}

/// `b` fresh mixture pairs.
pub fn mixture_batch<R: Rng + ?Sized>(task: &MixtureTask, b: usize, rng: &mut R) -> Batch {
    let mut batch = Batch::new(task.input_dim());
    fill_mixture(task, b, rng, &mut batch);
    batch
}

/// Gradient rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Standard SGD on the ℓ2 risk: gate on the student activation.
    Sgd,
    /// Label-gated update: gate on `y > 0`.
    Alg1,
}

impl Variant {
    /// Lowercase name used in files.
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Sgd => "sgd",
            Variant::Alg1 => "alg1",
        }
    }
}

fn check_gradient_input(w: &[f64], batch: &Batch) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::invalid("batch", "must be nonempty"));
    }
    if w.len() != batch.dim {
        return Err(Error::DimensionMismatch {
            index: 0,
            expected: batch.dim,
            got: w.len(),
        });
    }
    Ok(())
}

fn gradient_into(variant: Variant, w: &[f64], batch: &Batch, out: &mut [f64]) {
    out.iter_mut().for_each(|g| *g = 0.0);
    for (x, y) in batch.iter() {
        let pre = dot(w, x);
        let active = match variant {
            Variant::Sgd => pre > 0.0,
            Variant::Alg1 => y > 0.0,
        };
        if active {
            let r = y - pre;
            for (g, xi) in out.iter_mut().zip(x) {
                *g += r * xi;
            }
        }
    }
    let scale = -1.0 / batch.len() as f64;
    out.iter_mut().for_each(|g| *g *= scale);
}

/// Mini-batch gradient under `variant`.
pub fn gradient(variant: Variant, w: &[f64], batch: &Batch) -> Result<WeightVector> {
    check_gradient_input(w, batch)?;
    let mut out = WeightVector::zeros(w.len());
    gradient_into(variant, w, batch, &mut out);
    Ok(out)
}

/// `−(1/b) Σ 1{y_i > 0} (y_i − ⟨w, x_i⟩) x_i`.
pub fn alg1_gradient(w: &[f64], batch: &Batch) -> Result<WeightVector> {
    gradient(Variant::Alg1, w, batch)
}

/// `−(1/b) Σ 1{⟨w, x_i⟩ > 0} (y_i − ⟨w, x_i⟩) x_i`.
pub fn sgd_gradient(w: &[f64], batch: &Batch) -> Result<WeightVector> {
    gradient(Variant::Sgd, w, batch)
}

/// Decision rule scored by [`classification_error_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Predictor {
    /// Predict class 1 iff `⟨w, x⟩ > 0`.
    #[default]
    Preactivation,
    /// Predict class 1 iff `relu(⟨w, x⟩) >= 0`, which is always true.
    LiteralRelu,
}

impl Predictor {
    fn predict(&self, w: &[f64], x: &[f64]) -> bool {
        match self {
            Predictor::Preactivation => dot(w, x) > 0.0,
            Predictor::LiteralRelu => relu(dot(w, x)) >= 0.0,
        }
    }
}

/// Monte-Carlo misclassification rate of `1{⟨w, x⟩ > 0}` on `n_mc` fresh draws.
pub fn classification_error<R: Rng + ?Sized>(
    w: &[f64],
    task: &MixtureTask,
    n_mc: usize,
    rng: &mut R,
) -> f64 {
    classification_error_with(w, task, n_mc, Predictor::Preactivation, rng)
}

/// [`classification_error`] under an explicit decision rule.
pub fn classification_error_with<R: Rng + ?Sized>(
    w: &[f64],
    task: &MixtureTask,
    n_mc: usize,
    predictor: Predictor,
    rng: &mut R,
) -> f64 {
    let n_mc = n_mc.max(1);
    let mut x = Vec::with_capacity(task.input_dim());
    let mut wrong = 0usize;
    for _ in 0..n_mc {
        x.clear();
        let y = push_mixture(task, rng, &mut x);
        if predictor.predict(w, &x) != (y > 0.0) {
            wrong += 1;
        }
    }
    wrong as f64 / n_mc as f64
}

/// Training hyper-parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Step length η (0 allowed: the identity map).
    pub eta: f64,
    /// Mini-batch size b.
    pub batch: usize,
    /// Number of iterates T, counting the initial point as `w_1`.
    pub iters: usize,
    /// Number of final iterates averaged, W.
    pub tail_window: usize,
    /// Gradient rule.
    pub variant: Variant,
    /// Diagnostics are recorded every `trace_stride` iterates.
    pub trace_stride: usize,
    /// Fresh mixture draws per classification-error checkpoint.
    pub eval_samples: usize,
    /// Decision rule for the classification-error trace.
    pub predictor: Predictor,
}

impl TrainConfig {
    /// Diagnostic stride used unless overridden.
    pub const DEFAULT_TRACE_STRIDE: usize = 100;
    /// Monte-Carlo draws per classification checkpoint unless overridden.
    pub const DEFAULT_EVAL_SAMPLES: usize = 2000;

    /// Config with default diagnostics.
    pub fn new(eta: f64, batch: usize, iters: usize, tail_window: usize, variant: Variant) -> Self {
        TrainConfig {
            eta,
            batch,
            iters,
            tail_window,
            variant,
            trace_stride: Self::DEFAULT_TRACE_STRIDE,
            eval_samples: Self::DEFAULT_EVAL_SAMPLES,
            predictor: Predictor::default(),
        }
    }

    /// Check every invariant.
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid("eta", "must be finite and non-negative"));
        }
        if self.batch < 1 {
            return Err(Error::invalid("batch", "must be at least 1"));
        }
        if self.iters < 1 {
            return Err(Error::invalid("iters", "must be at least 1"));
        }
        if self.tail_window < 1 || self.tail_window > self.iters {
            return Err(Error::invalid("tail_window", "must lie in [1, iters]"));
        }
        if self.trace_stride < 1 {
            return Err(Error::invalid("trace_stride", "must be at least 1"));
        }
        if self.eval_samples < 1 {
            return Err(Error::invalid("eval_samples", "must be at least 1"));
        }
        Ok(())
    }
}

/// One diagnostic sample at iterate `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    /// Iterate index (1-based).
    pub t: usize,
    /// Recorded value.
    pub value: f64,
}

/// What a training run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// Last iterate `w_T`.
    pub final_w: WeightVector,
    /// Mean of `w_{T−W+1}, …, w_T`.
    pub tail_average: WeightVector,
    /// `‖w_t − w_star‖` at the checkpoints (realizable task only).
    pub recovery_trace: Vec<TracePoint>,
    /// Misclassification rate at the checkpoints (mixture task only).
    pub classification_trace: Vec<TracePoint>,
    /// Set when the label-gated rule ran on 0/1 labels, where it only
    /// learns from class-1 samples.
    pub alg1_on_mixture: bool,
}

/// Train from `w_init` on fresh i.i.d. batches.
///
/// Iterates are `w_1 = w_init` and `w_{t+1} = w_t − η g_t` for
/// `t = 1..T−1`. Checkpoints are `t = 1`, every multiple of the trace
/// stride, and `t = T`. For the mixture task every checkpoint scores the
/// same evaluation sample, drawn from a stream seeded once from `rng`.
pub fn train_run<R: Rng + ?Sized>(
    task: &Task,
    cfg: &TrainConfig,
    w_init: &[f64],
    rng: &mut R,
) -> Result<RunOutcome> {
    cfg.validate()?;
    let dim = task.input_dim();
    if w_init.len() != dim {
        return Err(Error::DimensionMismatch {
            index: 0,
            expected: dim,
            got: w_init.len(),
        });
    }
    let eval_seed = match task {
        Task::Mixture(_) => rng.next_u64(),
        Task::Realizable(_) => 0,
    };

    let mut w = w_init.to_vec();
    let mut grad = alloc::vec![0.0; dim];
    let mut tail = alloc::vec![0.0; dim];
    let mut batch = Batch::new(dim);
    let mut recovery_trace = Vec::new();
    let mut classification_trace = Vec::new();
    let tail_start = cfg.iters - cfg.tail_window + 1;

    for t in 1..=cfg.iters {
        if t >= tail_start {
            tail.iter_mut().zip(&w).for_each(|(s, v)| *s += v);
        }
        if t == 1 || t % cfg.trace_stride == 0 || t == cfg.iters {
            match task {
                Task::Realizable(r) => {
                    let err = norm_diff(&w, r.w_star());
                    recovery_trace.push(TracePoint { t, value: err });
                }
                Task::Mixture(m) => {
                    let mut eval_rng = Xoshiro256PlusPlus::seed_from_u64(eval_seed);
                    let err = classification_error_with(
                        &w,
                        m,
                        cfg.eval_samples,
                        cfg.predictor,
                        &mut eval_rng,
                    );
                    classification_trace.push(TracePoint { t, value: err });
                }
            }
        }
        if t == cfg.iters {
            break;
        }

        match task {
            Task::Realizable(r) => fill_realizable(r, cfg.batch, rng, &mut batch),
            Task::Mixture(m) => fill_mixture(m, cfg.batch, rng, &mut batch),
        }
        gradient_into(cfg.variant, &w, &batch, &mut grad);
        let mut finite = true;
        for (wi, gi) in w.iter_mut().zip(&grad) {
            *wi -= cfg.eta * gi;
            finite &= wi.is_finite();
        }
        if !finite {
            return Err(Error::Diverged { iteration: t + 1 });
        }
    }

    let inv_w = 1.0 / cfg.tail_window as f64;
    tail.iter_mut().for_each(|s| *s *= inv_w);
    Ok(RunOutcome {
        final_w: WeightVector::from(w),
        tail_average: WeightVector::from(tail),
        recovery_trace,
        classification_trace,
        alg1_on_mixture: matches!(task, Task::Mixture(_)) && cfg.variant == Variant::Alg1,
    })
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::Rng;

    fn wv(v: &[f64]) -> WeightVector {
        WeightVector::from(v.to_vec())
    }

    fn rng(seed: u64) -> Xoshiro256PlusPlus {
        Xoshiro256PlusPlus::seed_from_u64(seed)
    }

    #[test]
    fn relu_values() {
        assert_eq!(relu(-3.0), 0.0);
        assert_eq!(relu(0.0), 0.0);
        assert_eq!(relu(2.5), 2.5);
    }

    proptest! {
        #[test]
        fn relu_is_nonnegative_and_kills_nonpositive(z in -1e6..1e6f64) {
            prop_assert!(relu(z) >= 0.0);
            if z <= 0.0 {
                prop_assert_eq!(relu(z), 0.0);
            } else {
                prop_assert_eq!(relu(z), z);
            }
        }

        #[test]
        fn rules_agree_when_activations_agree(
            w in prop::collection::vec(-2.0..2.0f64, 3),
            xs in prop::collection::vec(prop::collection::vec(-2.0..2.0f64, 3), 1..8),
            ys in prop::collection::vec(0.01..3.0f64, 8),
        ) {
            // label positive exactly where the student is active
            let pairs: Vec<(Vec<f64>, f64)> = xs
                .into_iter()
                .zip(ys)
                .map(|(x, y)| {
                    let active = dot(&w, &x) > 0.0;
                    (x, if active { y } else { 0.0 })
                })
                .collect();
            let batch = Batch::from_pairs(&pairs).unwrap();
            prop_assert_eq!(alg1_gradient(&w, &batch).unwrap(), sgd_gradient(&w, &batch).unwrap());
        }
    }

    #[test]
    fn realizable_labels() {
        let task = RealizableTask::new(wv(&[1.0, 0.0])).unwrap();
        assert_eq!(relu(dot(task.w_star(), &[3.0, 7.0])), 3.0);
        let task = RealizableTask::new(wv(&[1.0, 1.0])).unwrap();
        assert_eq!(relu(dot(task.w_star(), &[-1.0, -1.0])), 0.0);

        let batch = realizable_batch(&task, 64, &mut rng(1));
        assert_eq!(batch.len(), 64);
        for (x, y) in batch.iter() {
            assert!(y >= 0.0);
            assert_eq!(y, relu(dot(task.w_star(), x)));
        }
    }

    #[test]
    fn realizable_half_of_labels_are_zero() {
        let task = RealizableTask::new(wv(&[1.0])).unwrap();
        let batch = realizable_batch(&task, 100_000, &mut rng(2));
        let zeros = batch.iter().filter(|&(_, y)| y == 0.0).count() as f64 / 1e5;
        assert!((zeros - 0.5).abs() < 0.01, "{zeros}");
    }

    #[test]
    fn alg1_gradient_examples() {
        let batch = Batch::from_pairs(&[(vec![1.0, 0.0], 1.0), (vec![0.0, 1.0], 1.0)]).unwrap();
        assert_eq!(alg1_gradient(&[1.0, 0.0], &batch).unwrap(), wv(&[0.0, -0.5]));

        let dead = Batch::from_pairs(&[(vec![1.0, 2.0], 0.0), (vec![-3.0, 1.0], 0.0)]).unwrap();
        assert_eq!(alg1_gradient(&[0.3, -0.7], &dead).unwrap(), wv(&[0.0, 0.0]));

        let w_star = wv(&[0.5, 1.5]);
        let pairs: Vec<(Vec<f64>, f64)> = [[1.0, 1.0], [2.0, 0.5], [0.0, 3.0]]
            .iter()
            .map(|x| (x.to_vec(), relu(dot(&w_star, x))))
            .collect();
        let batch = Batch::from_pairs(&pairs).unwrap();
        assert_eq!(alg1_gradient(&w_star, &batch).unwrap(), wv(&[0.0, 0.0]));
    }

    #[test]
    fn sgd_gradient_examples() {
        let batch = Batch::from_pairs(&[(vec![1.0, 0.0], 1.0)]).unwrap();
        assert_eq!(sgd_gradient(&[-1.0, 0.0], &batch).unwrap(), wv(&[0.0, 0.0]));
        assert_eq!(alg1_gradient(&[-1.0, 0.0], &batch).unwrap(), wv(&[-2.0, 0.0]));
        assert_eq!(sgd_gradient(&[1.0, 0.0], &batch).unwrap(), wv(&[0.0, 0.0]));

        let batch = Batch::from_pairs(&[(vec![2.0, 0.0], 0.0)]).unwrap();
        assert_eq!(sgd_gradient(&[1.0, 0.0], &batch).unwrap(), wv(&[4.0, 0.0]));
    }

    #[test]
    fn gradient_input_errors() {
        let batch = Batch::from_pairs(&[(vec![1.0, 0.0], 1.0)]).unwrap();
        assert!(matches!(
            sgd_gradient(&[1.0], &batch),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(alg1_gradient(&[1.0], &Batch::new(1)).is_err());
        let mut b = Batch::new(2);
        assert!(b.push(&[1.0], 0.0).is_err());
    }

    #[test]
    fn mixture_validation() {
        assert!(MixtureTask::new(wv(&[1.0]), 1.0, 1.0).is_err());
        assert!(MixtureTask::new(wv(&[1.0]), 0.0, 1.0).is_err());
        assert!(MixtureTask::new(wv(&[]), 1.0, 2.0).is_err());
        let m = MixtureTask::default_for_dim(4).unwrap();
        assert!((m.mean().norm() - 1.0).abs() < 1e-15);
        assert_eq!((m.sigma0(), m.sigma1()), (1.0, 2.0));
    }

    #[test]
    fn mixture_moments() {
        let task = MixtureTask::new(wv(&[1.0, -0.5]), 1.5, 0.5).unwrap();
        let mut r = rng(3);
        let n = 100_000;
        let draws: Vec<(WeightVector, f64)> = (0..n).map(|_| mixture_sample(&task, &mut r)).collect();
        let ones: Vec<&WeightVector> = draws.iter().filter(|d| d.1 == 1.0).map(|d| &d.0).collect();
        let zeros: Vec<&WeightVector> = draws.iter().filter(|d| d.1 == 0.0).map(|d| &d.0).collect();
        assert_eq!(ones.len() + zeros.len(), n);
        let frac = ones.len() as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.005, "{frac}");

        for k in 0..2 {
            let n1 = ones.len() as f64;
            let mean = ones.iter().map(|x| x[k]).sum::<f64>() / n1;
            assert!((mean - task.mean()[k]).abs() < 3.0 * task.sigma1() / n1.sqrt());

            let n0 = zeros.len() as f64;
            let m0 = zeros.iter().map(|x| x[k]).sum::<f64>() / n0;
            let var = zeros.iter().map(|x| (x[k] - m0).powi(2)).sum::<f64>() / (n0 - 1.0);
            let target = task.sigma0() * task.sigma0();
            assert!((var - target).abs() < 0.05 * target, "{var}");
        }
    }

    #[test]
    fn classification_error_extremes_and_closed_form() {
        let task = MixtureTask::new(wv(&[20.0, 0.0]), 1.0, 2.0).unwrap();
        assert!(classification_error(&[1.0, 0.0], &task, 10_000, &mut rng(4)) < 1e-3);
        assert!(classification_error(&[-1.0, 0.0], &task, 10_000, &mut rng(5)) > 0.999);

        // sigma0 = sigma1 is not a valid task, so use 1 vs 1+1e-12 ≈ equal
        let task = MixtureTask::new(wv(&[1.0]), 1.0, 1.0 + 1e-12).unwrap();
        let err = classification_error(&[1.0], &task, 200_000, &mut rng(6));
        // Φ(−1)
        let phi_m1 = 0.158_655_253_931_457_05;
        let tol = 4.0 * (phi_m1 * (1.0 - phi_m1) / 200_000.0f64).sqrt();
        assert!((err - phi_m1).abs() < tol, "{err}");
    }

    #[test]
    fn literal_predictor_is_constant() {
        let task = MixtureTask::default_for_dim(3).unwrap();
        let err = classification_error_with(&[1.0, 1.0, 1.0], &task, 20_000, Predictor::LiteralRelu, &mut rng(7));
        // always predicts class 1, so the error is the class-0 share
        assert!((err - 0.5).abs() < 0.02);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::new(0.01, 4, 100, 10, Variant::Sgd).validate().is_ok());
        assert!(TrainConfig::new(0.01, 0, 100, 10, Variant::Sgd).validate().is_err());
        assert!(TrainConfig::new(0.01, 4, 100, 101, Variant::Sgd).validate().is_err());
        assert!(TrainConfig::new(-0.1, 4, 100, 10, Variant::Sgd).validate().is_err());
        assert!(TrainConfig::new(f64::NAN, 4, 100, 10, Variant::Sgd).validate().is_err());
        assert!(TrainConfig::new(0.0, 4, 100, 100, Variant::Alg1).validate().is_ok());
    }

    #[test]
    fn teacher_is_a_fixed_point() {
        let w_star = wv(&[0.3, -1.2, 0.8]);
        let task = Task::Realizable(RealizableTask::new(w_star.clone()).unwrap());
        for variant in [Variant::Sgd, Variant::Alg1] {
            let cfg = TrainConfig::new(0.05, 8, 500, 100, variant);
            let out = train_run(&task, &cfg, &w_star, &mut rng(8)).unwrap();
            assert_eq!(out.final_w, w_star);
            assert!(out.tail_average.distance(&w_star) < 1e-14);
        }
    }

    #[test]
    fn tail_average_and_trace_layout() {
        let task = Task::Realizable(RealizableTask::new(wv(&[1.0, 2.0])).unwrap());
        let cfg = TrainConfig {
            trace_stride: 10,
            ..TrainConfig::new(0.0, 2, 35, 35, Variant::Alg1)
        };
        let out = train_run(&task, &cfg, &[0.5, 0.5], &mut rng(9)).unwrap();
        assert_eq!(out.tail_average, wv(&[0.5, 0.5]));
        let ts: Vec<usize> = out.recovery_trace.iter().map(|p| p.t).collect();
        assert_eq!(ts, vec![1, 10, 20, 30, 35]);
        assert!(out.classification_trace.is_empty());
        assert!(matches!(
            train_run(&task, &cfg, &[0.5], &mut rng(9)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tail_average_matches_manual_mean() {
        let task = Task::Realizable(RealizableTask::new(wv(&[1.0, -1.0])).unwrap());
        let cfg = TrainConfig::new(0.1, 3, 20, 5, Variant::Sgd);
        let full = train_run(&task, &cfg, &[0.0, 0.0], &mut rng(10)).unwrap();
        let mut acc = [0.0; 2];
        for t in 16..=20 {
            let c = TrainConfig::new(0.1, 3, t, 1, Variant::Sgd);
            let w = train_run(&task, &c, &[0.0, 0.0], &mut rng(10)).unwrap().final_w;
            acc[0] += w[0] / 5.0;
            acc[1] += w[1] / 5.0;
        }
        assert!((full.tail_average[0] - acc[0]).abs() < 1e-14);
        assert!((full.tail_average[1] - acc[1]).abs() < 1e-14);
    }

    #[test]
    fn training_matches_explicit_gradient_steps() {
        let task = RealizableTask::new(wv(&[0.7, -0.2, 1.1])).unwrap();
        let cfg = TrainConfig::new(0.05, 4, 6, 1, Variant::Sgd);
        let out = train_run(&Task::Realizable(task.clone()), &cfg, &[0.1, 0.1, 0.1], &mut rng(11)).unwrap();
        let mut r = rng(11);
        let mut w = wv(&[0.1, 0.1, 0.1]);
        for _ in 1..6 {
            let batch = realizable_batch(&task, 4, &mut r);
            let g = sgd_gradient(&w, &batch).unwrap();
            w.iter_mut().zip(g.iter()).for_each(|(wi, gi)| *wi -= 0.05 * gi);
        }
        assert_eq!(out.final_w, w);
    }

    #[test]
    fn huge_step_diverges() {
        let mut r = rng(12);
        let w_star: WeightVector = (0..100).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let task = Task::Realizable(RealizableTask::new(w_star).unwrap());
        let cfg = TrainConfig::new(10.0, 4, 8000, 1000, Variant::Alg1);
        match train_run(&task, &cfg, &vec![0.0; 100], &mut r) {
            Err(Error::Diverged { iteration }) => assert!(iteration < 8000),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn alg1_iterates_are_positively_homogeneous() {
        let w_star = wv(&[0.4, -1.0, 0.9, 0.2]);
        let init = wv(&[1.0, 1.0, -0.5, 0.0]);
        let cfg = TrainConfig::new(0.02, 5, 300, 50, Variant::Alg1);
        let run = |c: f64| {
            let task = Task::Realizable(RealizableTask::new(w_star.scaled(c)).unwrap());
            train_run(&task, &cfg, &init.scaled(c), &mut rng(13)).unwrap()
        };
        let base = run(1.0);
        // powers of two scale every floating operation exactly
        assert_eq!(run(2.0).final_w, base.final_w.scaled(2.0));
        let three = run(3.0);
        for (a, b) in three.tail_average.iter().zip(base.tail_average.iter()) {
            assert!((a - 3.0 * b).abs() < 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn mixture_run_records_classification_trace() {
        let task = Task::Mixture(MixtureTask::default_for_dim(2).unwrap());
        let cfg = TrainConfig::new(0.01, 8, 400, 100, Variant::Sgd);
        let out = train_run(&task, &cfg, &[0.0, 0.0], &mut rng(14)).unwrap();
        assert!(out.recovery_trace.is_empty());
        assert_eq!(out.classification_trace.len(), 5);
        assert!(!out.alg1_on_mixture);
        let cfg = TrainConfig::new(0.01, 8, 400, 100, Variant::Alg1);
        assert!(train_run(&task, &cfg, &[0.0, 0.0], &mut rng(14)).unwrap().alg1_on_mixture);
    }
}
