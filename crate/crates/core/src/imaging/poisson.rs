//! Exact Poisson variate generation.
//!
//! Small means use inversion by sequential search; means of 10 and above use
//! Hörmann's transformed rejection with squeeze (PTRS).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Image;
use crate::error::{Error, Result};

const INVERSION_LIMIT: f64 = 10.0;

/// Draws every pixel independently from `Poisson(img[i])`.
///
/// The stream is a ChaCha8 generator seeded from `seed` and consumed in
/// row-major order, so the output depends only on `(img, seed)`.
pub fn poisson_sample(img: &Image, seed: u64) -> Result<Image> {
    if !img.is_nonnegative() {
        return Err(Error::InvalidImage(
            "Poisson intensities must be nonnegative".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = img
        .data()
        .iter()
        .map(|&mu| sample_poisson_scalar(mu, &mut rng))
        .collect();
    Image::new(img.width(), img.height(), data)
}

/// One draw from `Poisson(mu)`. `mu == 0` yields 0 without consuming
/// randomness.
pub fn sample_poisson_scalar<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> f64 {
    debug_assert!(mu >= 0.0 && mu.is_finite());
    if mu <= 0.0 {
        0.0
    } else if mu < INVERSION_LIMIT {
        inversion(mu, rng)
    } else {
        ptrs(mu, rng)
    }
}

fn inversion<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    let mut k = 0u32;
    let mut p = (-mu).exp();
    let mut cdf = p;
    // The cap only triggers when rounding leaves the cdf a hair below u.
    while u > cdf && k < 1000 {
        k += 1;
        p *= mu / k as f64;
        cdf += p;
    }
    k as f64
}

fn ptrs<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> f64 {
    let smu = mu.sqrt();
    let b = 0.931 + 2.53 * smu;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    let log_mu = mu.ln();
    loop {
        let u = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mu + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -mu + k * log_mu - libm::lgamma(k + 1.0);
        if lhs <= rhs {
            return k;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(mu: f64, n: usize, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_poisson_scalar(mu, &mut rng))
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (mean, var)
    }

    #[test]
    fn zero_intensity_gives_zero() {
        let img = Image::zeros(16, 16);
        for seed in [0, 1, 99] {
            assert_eq!(poisson_sample(&img, seed).unwrap(), img);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let img = Image::from_fn(32, 32, |x, y| (x + y) as f64 * 0.7);
        let a = poisson_sample(&img, 42).unwrap();
        let b = poisson_sample(&img, 42).unwrap();
        let c = poisson_sample(&img, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.data().iter().all(|v| v.fract() == 0.0 && *v >= 0.0));
    }

    #[test]
    fn rejects_negative_intensity() {
        let img = Image::new(2, 1, vec![1.0, -0.5]).unwrap();
        assert!(poisson_sample(&img, 0).is_err());
    }

    #[test]
    fn constant_image_moments() {
        // 10^6 pixels at mu = 4: standard error of the mean is 0.002 and of
        // the variance about 0.006, so the bounds sit at 5 and 8 sigma.
        let img = Image::filled(1000, 1000, 4.0);
        let out = poisson_sample(&img, 7).unwrap();
        let n = out.len() as f64;
        let mean = out.mean();
        let var = out.data().iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - 4.0).abs() < 0.01, "mean {mean}");
        assert!((var - 4.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn both_regimes_match_mean_and_variance() {
        for (mu, seed) in [
            (0.1, 1),
            (2.5, 2),
            (9.99, 3),
            (10.0, 4),
            (37.0, 5),
            (400.0, 6),
        ] {
            let n = 400_000;
            let (mean, var) = moments(mu, n, seed);
            // Five standard errors on each moment.
            let se_mean = (mu / n as f64).sqrt();
            let se_var = ((mu + 2.0 * mu * mu) / n as f64).sqrt();
            assert!((mean - mu).abs() < 5.0 * se_mean, "mu {mu}: mean {mean}");
            assert!((var - mu).abs() < 5.0 * se_var, "mu {mu}: var {var}");
        }
    }

    #[test]
    fn rejection_regime_matches_pmf() {
        // Chi-square-style check of the PTRS branch against the exact pmf.
        let mu = 15.0;
        let n = 500_000;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = vec![0usize; 60];
        for _ in 0..n {
            let k = sample_poisson_scalar(mu, &mut rng) as usize;
            counts[k.min(59)] += 1;
        }
        for k in 5..=25 {
            let pmf = (-mu + k as f64 * f64::ln(mu) - libm::lgamma(k as f64 + 1.0)).exp();
            let expected = pmf * n as f64;
            let sd = expected.sqrt();
            assert!(
                (counts[k] as f64 - expected).abs() < 5.0 * sd,
                "k={k}: {} vs {expected}",
                counts[k]
            );
        }
    }
}
