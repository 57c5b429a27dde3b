//! Symmetric Levy alpha-stable variates via the Chambers-Mallows-Stuck
//! transform (beta = 0, 0-parameterization). At alpha = 2 the draw reduces
//! to N(0, 2 delta^2).

use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::FRAC_PI_2;

/// One symmetric stable draw with stability `alpha` in (1, 2] and scale
/// `delta` > 0.
pub fn levy_stable_sample(alpha: f64, delta: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::Precondition(format!(
            "alpha must lie in (1, 2], got {alpha}"
        )));
    }
    if delta <= 0.0 {
        return Err(Error::Precondition(format!(
            "delta must be positive, got {delta}"
        )));
    }
    Ok(delta * standard_stable(alpha, rng))
}

/// Unit-scale symmetric stable draw.
pub fn standard_stable(alpha: f64, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.gen_range(-FRAC_PI_2..FRAC_PI_2);
    let w: f64 = -rng.gen_range(0.0f64..1.0).ln(); // Exp(1); gen_range excludes 1.0 -> ln finite
    if (alpha - 2.0).abs() < 1e-12 {
        // CMS at alpha = 2 simplifies to 2 sin(U) sqrt(W)
        return 2.0 * u.sin() * w.sqrt();
    }
    let au = alpha * u;
    (au.sin() / u.cos().powf(1.0 / alpha)) * ((u - au).cos() / w).powf((1.0 - alpha) / alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn gaussian_boundary_case() {
        // alpha = 2, delta = 1 is N(0, 2).
        let mut rng = RngStream::root(11).rng();
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| levy_stable_sample(2.0, 1.0, &mut rng).unwrap())
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 2.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn symmetric_median_near_zero() {
        let mut rng = RngStream::root(12).rng();
        let n = 1_000_000;
        let mut draws: Vec<f64> = (0..n)
            .map(|_| levy_stable_sample(1.7, 35.0, &mut rng).unwrap())
            .collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = draws[n / 2];
        assert!(median.abs() < 0.5, "median {median}");
    }

    #[test]
    fn heavy_tail_vs_gaussian_fit() {
        let mut rng = RngStream::root(13).rng();
        let n = 1_000_000;
        let mut draws: Vec<f64> = (0..n)
            .map(|_| levy_stable_sample(1.1, 1.0, &mut rng).unwrap())
            .collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q99 = draws[(0.99 * n as f64) as usize];
        // Gaussian fit from the interquartile range; stable tails dwarf it.
        let iqr = draws[(0.75 * n as f64) as usize] - draws[(0.25 * n as f64) as usize];
        let gauss_sd = iqr / 1.349;
        let gauss_q99 = 2.3263 * gauss_sd;
        assert!(q99 > 3.0 * gauss_q99, "q99 {q99}, gaussian fit {gauss_q99}");
    }

    #[test]
    fn rejects_out_of_range() {
        let mut rng = RngStream::root(14).rng();
        assert!(levy_stable_sample(0.9, 1.0, &mut rng).is_err());
        assert!(levy_stable_sample(1.5, 0.0, &mut rng).is_err());
        assert!(levy_stable_sample(2.1, 1.0, &mut rng).is_err());
    }
}
