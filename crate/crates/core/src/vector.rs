use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

use crate::math;

/// Dense real vector in R^d: gate weights, teacher weights, tail averages.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Zero vector of dimension `dim`.
    pub fn zeros(dim: usize) -> Self {
        WeightVector(alloc::vec![0.0; dim])
    }

    /// Dimension.
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &WeightVector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        math::sqrt(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| (a - b) * (a - b))
                .sum(),
        )
    }

    /// Componentwise `self - other`.
    pub fn sub(&self, other: &WeightVector) -> WeightVector {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()
    }

    /// Multiply every component by `c`.
    pub fn scaled(&self, c: f64) -> WeightVector {
        self.0.iter().map(|a| a * c).collect()
    }

    /// Consume into the backing vector.
    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for WeightVector {
    fn from(v: Vec<f64>) -> Self {
        WeightVector(v)
    }
}

impl FromIterator<f64> for WeightVector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        WeightVector(iter.into_iter().collect())
    }
}

impl Deref for WeightVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for WeightVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl AsRef<[f64]> for WeightVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Inner product with four independent accumulators so the loop vectorises.
/// The summation order is fixed, so results are reproducible.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Euclidean norm, rescaled when squaring would under- or overflow.
pub(crate) fn norm(a: &[f64]) -> f64 {
    const SMALL: f64 = 1e-150;
    const LARGE: f64 = 1e150;
    let max = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max == 0.0 || !max.is_finite() || (SMALL..=LARGE).contains(&max) {
        return math::sqrt(dot(a, a));
    }
    let scaled: Vec<f64> = a.iter().map(|x| x / max).collect();
    max * math::sqrt(dot(&scaled, &scaled))
}
