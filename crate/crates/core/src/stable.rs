//! Symmetric α-stable laws SαS(σ).
//!
//! A variable is SαS(σ) when its characteristic function is
//! `exp(-σ^α |t|^α)`. `α = 2` is the centered Gaussian with variance `2σ²`
//! and `α = 1` is the Cauchy law with scale σ. These laws are strictly
//! stable: the sum of `m` independent copies has the law of `m^{1/α}` times
//! one copy, which [`stability_ks_statistic`] checks empirically.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::distr::{Distribution, Open01};
use rand::Rng;
use rand_distr::Exp1;

use crate::{ks, math, Error, Result};

/// Parameters of a symmetric α-stable law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParams {
    alpha: f64,
    sigma: f64,
}

impl StableParams {
    /// Validated constructor: `0 < alpha <= 2`, `sigma > 0`.
    pub fn new(alpha: f64, sigma: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::invalid("alpha", "must lie in (0, 2]"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be positive and finite"));
        }
        Ok(StableParams { alpha, sigma })
    }

    /// Stability index α.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Scale σ.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Characteristic function `exp(-σ^α |t|^α)`.
pub fn sas_characteristic(params: StableParams, t: f64) -> f64 {
    math::exp(-math::powf(params.sigma * t.abs(), params.alpha))
}

/// The SαS(σ) law as a [`Distribution`].
///
/// Sampling uses the uniform × exponential transform: with `V` uniform on
/// `(-π/2, π/2)` and `E ~ Exp(1)`,
///
/// ```text
/// X = σ · sin(αV) / cos(V)^{1/α} · (cos(V − αV) / E)^{(1−α)/α}    (α ≠ 1)
/// X = σ · tan(V)                                                  (α = 1)
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricStable {
    params: StableParams,
}

impl SymmetricStable {
    /// Law with the given parameters.
    pub fn new(params: StableParams) -> Self {
        SymmetricStable { params }
    }
}

impl Distribution<f64> for SymmetricStable {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let StableParams { alpha, sigma } = self.params;
        let u: f64 = rng.sample(Open01);
        let v = PI * (u - 0.5);
        if alpha == 1.0 {
            return sigma * math::tan(v);
        }
        let e: f64 = rng.sample(Exp1);
        let head = math::sin(alpha * v) / math::powf(math::cos(v), 1.0 / alpha);
        let tail = math::powf(math::cos(v - alpha * v) / e, (1.0 - alpha) / alpha);
        sigma * head * tail
    }
}

/// One draw from SαS(σ).
pub fn sample_sas<R: Rng + ?Sized>(params: StableParams, rng: &mut R) -> f64 {
    SymmetricStable::new(params).sample(rng)
}

/// Number of scaled group sums that [`stability_ks_statistic`] compares for
/// `n` samples and group size `m`.
pub fn stability_group_count(n: usize, m: usize) -> usize {
    if m == 0 {
        0
    } else {
        (n / 2) / m
    }
}

/// Two-sample KS statistic between `m`-sums scaled by `m^{-1/α}` and raw samples.
///
/// The first half of `samples` is cut into disjoint, order-preserving groups
/// of `m`; each group sum is multiplied by `m^{-1/alpha}`. An equal number of
/// raw samples is drawn without replacement from the second half using `rng`.
/// Small values mean the data is consistent with strict α-stability.
///
/// Requires `m >= 2` and `samples.len() >= 200·m`.
pub fn stability_ks_statistic<R: Rng + ?Sized>(
    samples: &[f64],
    m: usize,
    alpha: f64,
    rng: &mut R,
) -> Result<f64> {
    if m < 2 {
        return Err(Error::invalid("m", "group size must be at least 2"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("alpha", "must be positive and finite"));
    }
    let needed = 200 * m;
    if samples.len() < needed {
        return Err(Error::InsufficientSamples {
            needed,
            got: samples.len(),
        });
    }

    let groups = stability_group_count(samples.len(), m);
    let scale = math::powf(m as f64, -1.0 / alpha);
    let sums: Vec<f64> = samples[..groups * m]
        .chunks_exact(m)
        .map(|g| g.iter().sum::<f64>() * scale)
        .collect();

    let reserve = &samples[samples.len() / 2..];
    let raw: Vec<f64> = rand::seq::index::sample(rng, reserve.len(), groups)
        .into_iter()
        .map(|i| reserve[i])
        .collect();

    Ok(ks::two_sample_statistic(&sums, &raw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;
    use rand_distr::StandardNormal;

    fn params(alpha: f64, sigma: f64) -> StableParams {
        StableParams::new(alpha, sigma).unwrap()
    }

    fn draws(alpha: f64, sigma: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let law = SymmetricStable::new(params(alpha, sigma));
        (0..n).map(|_| law.sample(&mut rng)).collect()
    }

    fn median(mut xs: Vec<f64>) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len();
        if n % 2 == 1 {
            xs[n / 2]
        } else {
            0.5 * (xs[n / 2 - 1] + xs[n / 2])
        }
    }

    fn variance(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    }

    #[test]
    fn params_are_validated() {
        assert!(StableParams::new(0.0, 1.0).is_err());
        assert!(StableParams::new(2.01, 1.0).is_err());
        assert!(StableParams::new(f64::NAN, 1.0).is_err());
        assert!(StableParams::new(1.5, 0.0).is_err());
        assert!(StableParams::new(1.5, -1.0).is_err());
        assert!(StableParams::new(2.0, 1.0).is_ok());
    }

    #[test]
    fn characteristic_values() {
        assert_eq!(sas_characteristic(params(1.5, 1.0), 0.0), 1.0);
        let e_inv = (-1.0f64).exp();
        assert!((sas_characteristic(params(2.0, 1.0), 1.0) - e_inv).abs() < 1e-15);
        assert!((sas_characteristic(params(1.0, 2.0), 0.5) - e_inv).abs() < 1e-15);
    }

    #[test]
    fn characteristic_is_even_and_decreasing() {
        let p = params(1.3, 0.7);
        let mut prev = 1.0;
        for i in 1..200 {
            let t = i as f64 * 0.05;
            let v = sas_characteristic(p, t);
            assert_eq!(v, sas_characteristic(p, -t));
            assert!(v < 1.0);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn cauchy_median_is_zero() {
        let m = median(draws(1.0, 1.0, 100_000, 1));
        assert!(m.abs() < 0.02, "median {m}");
    }

    #[test]
    fn cauchy_half_mass_in_unit_interval() {
        // F(1) - F(-1) = (atan(1) - atan(-1)) / π = 1/2
        let xs = draws(1.0, 1.0, 100_000, 2);
        let frac = xs.iter().filter(|x| x.abs() < 1.0).count() as f64 / xs.len() as f64;
        assert!((frac - 0.5).abs() < 0.01, "fraction {frac}");
    }

    #[test]
    fn alpha_two_has_variance_two_sigma_squared() {
        let v = variance(&draws(2.0, 1.0, 100_000, 3));
        assert!((v - 2.0).abs() < 0.1, "variance {v}");
        // oracle: direct Gaussian sampling with sd σ√2
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(4);
        let gauss: Vec<f64> = (0..100_000)
            .map(|_| 2f64.sqrt() * rng.sample::<f64, _>(StandardNormal))
            .collect();
        assert!((variance(&gauss) - 2.0).abs() < 0.1);
    }

    #[test]
    fn alpha_two_matches_gaussian_law() {
        let n = 100_000;
        let stable = draws(2.0, 1.5, n, 5);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(6);
        let sd = 1.5 * 2f64.sqrt();
        let gauss: Vec<f64> = (0..n)
            .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let d = ks::two_sample_statistic(&stable, &gauss);
        assert!(d < ks::critical_value(n, n, 0.01), "KS {d}");
    }

    #[test]
    fn stability_statistic_matching_alpha() {
        for (seed, alpha) in [(10u64, 1.0), (11, 1.5), (12, 2.0)] {
            let xs = draws(alpha, 1.0, 100_000, seed);
            for m in [2usize, 4, 8] {
                let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed + 100);
                let d = stability_ks_statistic(&xs, m, alpha, &mut rng).unwrap();
                let n = stability_group_count(xs.len(), m);
                assert!(
                    d < ks::critical_value(n, n, 0.01),
                    "alpha {alpha} m {m}: {d}"
                );
            }
        }
    }

    #[test]
    fn stability_statistic_gaussian_examples() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(20);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let good = stability_ks_statistic(&xs, 4, 2.0, &mut rng).unwrap();
        let bad = stability_ks_statistic(&xs, 4, 1.0, &mut rng).unwrap();
        assert!(good < 0.02, "{good}");
        assert!(bad > 0.1, "{bad}");
    }

    #[test]
    fn stability_statistic_rejects_bad_input() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(0);
        let xs = [0.5; 399];
        assert_eq!(
            stability_ks_statistic(&xs, 2, 1.0, &mut rng),
            Err(Error::InsufficientSamples {
                needed: 400,
                got: 399
            })
        );
        assert!(stability_ks_statistic(&xs, 1, 1.0, &mut rng).is_err());
        let xs = [0.5; 400];
        assert!(stability_ks_statistic(&xs, 2, 1.0, &mut rng).is_ok());
    }

    #[test]
    fn cauchy_variance_grows_with_sample_size() {
        let mut grew = 0;
        for rep in 0..10u64 {
            let small = variance(&draws(1.0, 1.0, 1_000, 1000 + rep));
            let large = variance(&draws(1.0, 1.0, 1_000_000, 2000 + rep));
            if large > small {
                grew += 1;
            }
        }
        assert!(grew >= 9, "grew in {grew} of 10");
    }
}
