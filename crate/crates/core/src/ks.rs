//! Two-sample Kolmogorov–Smirnov statistic.

use alloc::vec::Vec;

use crate::math;

/// `sup_x |F_a(x) − F_b(x)|` between the empirical CDFs of `a` and `b`.
///
/// Ties across the two samples are stepped together. Returns 0 when either
/// sample is empty.
pub fn two_sample_statistic(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut a: Vec<f64> = a.to_vec();
    let mut b: Vec<f64> = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);

    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut sup = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = if a[i].total_cmp(&b[j]).is_le() { a[i] } else { b[j] };
        while i < a.len() && a[i].total_cmp(&x).is_le() {
            i += 1;
        }
        while j < b.len() && b[j].total_cmp(&x).is_le() {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    sup
}

/// Asymptotic critical value of the two-sample statistic at significance `level`:
/// `sqrt(-ln(level/2)/2) · sqrt((n1 + n2)/(n1·n2))`.
pub fn critical_value(n1: usize, n2: usize, level: f64) -> f64 {
    let c = math::sqrt(-math::ln(level / 2.0) / 2.0);
    let (n1, n2) = (n1 as f64, n2 as f64);
    c * math::sqrt((n1 + n2) / (n1 * n2))
}
