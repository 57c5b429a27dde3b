//! Deterministic quadrature reference for the one-parameter toy model.
//!
//! The idealized posterior (analytic mean/covariance in the synthetic
//! likelihood) has no closed form, but in one dimension it is cheap to
//! normalize on a grid. The grid object provides exact-to-quadrature
//! moments, quantiles, and inverse-CDF sampling used as the reference in
//! convergence and normality experiments.

use crate::error::{Error, Result};
use crate::model::{ParamVector, SimulatorModel, SummaryVector};
use crate::synlik::analytic_log_synlik;
use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Normalized density on an evenly spaced grid, with trapezoid weights.
#[derive(Debug, Clone)]
pub struct GridPosterior {
    pub grid: Vec<f64>,
    /// Normalized density values; trapezoid integral is exactly 1.
    pub density: Vec<f64>,
    /// Cumulative trapezoid integral at each grid point.
    cdf: Vec<f64>,
}

impl GridPosterior {
    /// Normalize exp(log_post) over an evenly spaced grid [lo, hi].
    pub fn from_log_density(
        lo: f64,
        hi: f64,
        points: usize,
        mut log_post: impl FnMut(f64) -> f64,
    ) -> Result<Self> {
        if points < 10 || !(hi > lo) {
            return Err(Error::Precondition(format!(
                "need >= 10 grid points on a non-empty interval, got {points} on [{lo}, {hi}]"
            )));
        }
        let step = (hi - lo) / (points - 1) as f64;
        let grid: Vec<f64> = (0..points).map(|i| lo + step * i as f64).collect();
        let logs: Vec<f64> = grid.iter().map(|&t| log_post(t)).collect();
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Precondition(
                "log posterior is -inf over the whole grid".into(),
            ));
        }
        let mut density: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
        let mut z = 0.0;
        for i in 1..points {
            z += 0.5 * (density[i - 1] + density[i]) * step;
        }
        for d in density.iter_mut() {
            *d /= z;
        }
        let mut cdf = vec![0.0; points];
        for i in 1..points {
            cdf[i] = cdf[i - 1] + 0.5 * (density[i - 1] + density[i]) * step;
        }
        // guard against rounding drift at the right end
        cdf[points - 1] = 1.0;
        Ok(GridPosterior { grid, density, cdf })
    }

    fn expect(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        let step = self.grid[1] - self.grid[0];
        let mut acc = 0.0;
        for i in 1..self.grid.len() {
            let a = f(self.grid[i - 1]) * self.density[i - 1];
            let b = f(self.grid[i]) * self.density[i];
            acc += 0.5 * (a + b) * step;
        }
        acc
    }

    pub fn mean(&self) -> f64 {
        self.expect(|t| t)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.expect(|t| (t - m).powi(2))
    }

    pub fn sd(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn skewness(&self) -> f64 {
        let m = self.mean();
        let s = self.sd();
        self.expect(|t| ((t - m) / s).powi(3))
    }

    pub fn excess_kurtosis(&self) -> f64 {
        let m = self.mean();
        let s = self.sd();
        self.expect(|t| ((t - m) / s).powi(4)) - 3.0
    }

    /// Inverse CDF by linear interpolation between grid points.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let i = self.cdf.partition_point(|&c| c < p);
        if i == 0 {
            return self.grid[0];
        }
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let frac = if c1 > c0 { (p - c0) / (c1 - c0) } else { 0.0 };
        self.grid[i - 1] + frac * (self.grid[i] - self.grid[i - 1])
    }

    /// Inverse-CDF draw.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        self.quantile(rng.gen_range(0.0..1.0))
    }
}

/// Idealized posterior of the toy model under a (possibly misspecified)
/// scaled analytic covariance, normalized by quadrature. The grid is
/// centered on the observed summary with a width of 12 approximate posterior
/// sds, clipped to the positive half-line.
pub fn toy_grid_posterior(
    model: &dyn SimulatorModel,
    s_obs: &SummaryVector,
    scale: f64,
    points: usize,
) -> Result<GridPosterior> {
    let ybar = s_obs[0];
    let n = model.sample_size() as f64;
    let center = ybar.max(0.5);
    let sd0 = (scale * center / n).sqrt();
    let lo = (center - 12.0 * sd0).max(1e-9);
    let hi = center + 12.0 * sd0;
    GridPosterior::from_log_density(lo, hi, points, |theta| {
        let tv: ParamVector = DVector::from_element(1, theta);
        let prior = model.prior_log_density(&tv);
        match analytic_log_synlik(model, &tv, s_obs, scale) {
            Ok(ll) => prior + ll,
            Err(_) => f64::NEG_INFINITY,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::toy::ToyModel;
    use approx::assert_relative_eq;

    #[test]
    fn recovers_standard_normal_moments() {
        let gp = GridPosterior::from_log_density(-8.0, 8.0, 4001, |t| -0.5 * t * t).unwrap();
        assert_relative_eq!(gp.mean(), 0.0, epsilon = 1e-8);
        assert_relative_eq!(gp.variance(), 1.0, epsilon = 1e-6);
        assert!(gp.skewness().abs() < 1e-8);
        assert!(gp.excess_kurtosis().abs() < 1e-4);
        assert_relative_eq!(gp.quantile(0.975), 1.959964, epsilon = 1e-3);
    }

    #[test]
    fn doubling_grid_changes_little() {
        let model = ToyModel::new(20);
        let s = DVector::from_element(1, 5.3);
        let a = toy_grid_posterior(&model, &s, 1.0, 2001).unwrap();
        let b = toy_grid_posterior(&model, &s, 1.0, 4001).unwrap();
        assert!((a.mean() - b.mean()).abs() < 1e-6);
        assert!((a.sd() - b.sd()).abs() < 1e-6);
    }

    #[test]
    fn inverse_cdf_sampling_matches_moments() {
        let model = ToyModel::new(20);
        let s = DVector::from_element(1, 4.8);
        let gp = toy_grid_posterior(&model, &s, 1.0, 4001).unwrap();
        let mut rng = crate::rng::RngStream::root(9).rng();
        let draws: Vec<f64> = (0..200_000).map(|_| gp.sample(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / draws.len() as f64;
        assert!((mean - gp.mean()).abs() < 0.01, "mean {mean} vs {}", gp.mean());
        assert!(
            (var.sqrt() - gp.sd()).abs() < 0.01,
            "sd {} vs {}",
            var.sqrt(),
            gp.sd()
        );
    }
}
