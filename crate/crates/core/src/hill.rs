//! Block-sum Hill estimator of the stability index.
//!
//! Given `K = K1·K2` samples `X_i`, form the `K2` block sums
//! `Y_i = X_{(i-1)K1+1} + … + X_{iK1}` and estimate
//!
//! ```text
//! 1/α ≈ ( mean_i log|Y_i| − mean_i log|X_i| ) / log K1
//! ```
//!
//! For strictly α-stable samples `|Y_i|` behaves like `K1^{1/α} |X_i|`, so
//! the gap of the log-averages isolates `1/α`. Vector samples are summed
//! componentwise and only the logarithms see the Euclidean norm.
//!
//! Samples beyond the first `K1·K2` are ignored.

use alloc::vec::Vec;

use crate::vector::norm;
use crate::{math, Error, Result, SampleKind};

/// Block layout for the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HillConfig {
    k1: usize,
    k2: usize,
}

impl HillConfig {
    /// `k1 >= 2` samples per block, `k2 >= 1` blocks.
    pub fn new(k1: usize, k2: usize) -> Result<Self> {
        if k1 < 2 {
            return Err(Error::invalid("k1", "must be at least 2 (log K1 is a divisor)"));
        }
        if k2 < 1 {
            return Err(Error::invalid("k2", "must be at least 1"));
        }
        Ok(HillConfig { k1, k2 })
    }

    /// Samples per block.
    pub fn k1(&self) -> usize {
        self.k1
    }

    /// Number of blocks.
    pub fn k2(&self) -> usize {
        self.k2
    }

    /// Samples consumed, `K1·K2`.
    pub fn sample_count(&self) -> usize {
        self.k1 * self.k2
    }
}

/// Result of [`hill_alpha`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailIndexEstimate {
    /// Estimate of 1/α.
    pub inv_alpha: f64,
    /// Estimate of α, the reciprocal of `inv_alpha`.
    pub alpha: f64,
    /// Samples per block.
    pub k1: usize,
    /// Number of blocks.
    pub k2: usize,
    /// Samples used, `k1·k2`.
    pub n_used: usize,
}

fn check_layout<S: AsRef<[f64]>>(xs: &[S], cfg: HillConfig) -> Result<usize> {
    let needed = cfg.sample_count();
    if xs.len() < needed {
        return Err(Error::InsufficientSamples {
            needed,
            got: xs.len(),
        });
    }
    let dim = xs[0].as_ref().len();
    if dim == 0 {
        return Err(Error::invalid("samples", "dimension must be at least 1"));
    }
    for (index, x) in xs[..needed].iter().enumerate() {
        let got = x.as_ref().len();
        if got != dim {
            return Err(Error::DimensionMismatch {
                index,
                expected: dim,
                got,
            });
        }
    }
    Ok(dim)
}

/// Componentwise sums of consecutive blocks of `k1` samples; `k2` blocks.
///
/// Each block is summed left to right.
pub fn block_sums<S: AsRef<[f64]>>(xs: &[S], cfg: HillConfig) -> Result<Vec<Vec<f64>>> {
    let dim = check_layout(xs, cfg)?;
    Ok(xs[..cfg.sample_count()]
        .chunks_exact(cfg.k1)
        .map(|block| {
            let mut sum = alloc::vec![0.0; dim];
            for x in block {
                for (s, v) in sum.iter_mut().zip(x.as_ref()) {
                    *s += v;
                }
            }
            sum
        })
        .collect())
}

/// The estimator of 1/α. May be negative or exceed 1; nothing is clamped.
///
/// Evaluated as `1 + mean_j( log|M_j| − mean_{i∈j} log|X_i| ) / log K1`
/// with `M_j = Y_j / K1` the block mean, which is the same quantity without
/// the cancellation between two large log-averages. All means are running
/// means, so equal terms average to themselves exactly.
pub fn hill_inverse_alpha<S: AsRef<[f64]>>(xs: &[S], cfg: HillConfig) -> Result<f64> {
    let dim = check_layout(xs, cfg)?;
    let mut block_mean = alloc::vec![0.0; dim];
    let mut gap = 0.0;
    for (j, block) in xs[..cfg.sample_count()].chunks_exact(cfg.k1).enumerate() {
        block_mean.fill(0.0);
        let mut log_raw = 0.0;
        for (i, x) in block.iter().enumerate() {
            let x = x.as_ref();
            let r = norm(x);
            if r == 0.0 {
                return Err(Error::ZeroNorm {
                    kind: SampleKind::Raw,
                    index: j * cfg.k1 + i,
                });
            }
            let n = (i + 1) as f64;
            log_raw += (math::ln(r) - log_raw) / n;
            for (m, v) in block_mean.iter_mut().zip(x) {
                *m += (v - *m) / n;
            }
        }
        let r = norm(&block_mean);
        if r == 0.0 {
            return Err(Error::ZeroNorm {
                kind: SampleKind::BlockSum,
                index: j,
            });
        }
        gap += (math::ln(r) - log_raw - gap) / (j + 1) as f64;
    }
    Ok(1.0 + gap / math::ln(cfg.k1 as f64))
}

/// α̂ as the reciprocal of [`hill_inverse_alpha`]; errors when that is not positive.
pub fn hill_alpha<S: AsRef<[f64]>>(xs: &[S], cfg: HillConfig) -> Result<TailIndexEstimate> {
    let inv_alpha = hill_inverse_alpha(xs, cfg)?;
    if !(inv_alpha > 0.0) {
        return Err(Error::NonPositiveInverse { inv_alpha });
    }
    Ok(TailIndexEstimate {
        inv_alpha,
        alpha: 1.0 / inv_alpha,
        k1: cfg.k1,
        k2: cfg.k2,
        n_used: cfg.sample_count(),
    })
}

fn as_vectors(xs: &[f64]) -> Vec<&[f64]> {
    xs.iter().map(core::slice::from_ref).collect()
}

/// [`block_sums`] for scalar samples.
pub fn block_sums_scalar(xs: &[f64], cfg: HillConfig) -> Result<Vec<f64>> {
    Ok(block_sums(&as_vectors(xs), cfg)?
        .into_iter()
        .map(|y| y[0])
        .collect())
}

/// [`hill_inverse_alpha`] for scalar samples, where `|·|` is the absolute value.
pub fn hill_inverse_alpha_scalar(xs: &[f64], cfg: HillConfig) -> Result<f64> {
    hill_inverse_alpha(&as_vectors(xs), cfg)
}

/// [`hill_alpha`] for scalar samples.
pub fn hill_alpha_scalar(xs: &[f64], cfg: HillConfig) -> Result<TailIndexEstimate> {
    hill_alpha(&as_vectors(xs), cfg)
}
