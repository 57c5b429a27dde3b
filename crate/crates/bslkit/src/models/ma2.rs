//! MA(2) model with the first 20 sample autocovariances as summary.
//!
//! y_t = z_t + theta1 z_{t-1} + theta2 z_{t-2}, z_t ~ N(0,1). The prior is
//! uniform over the invertibility triangle -1 < theta2 < 1,
//! theta1 + theta2 > -1, theta1 - theta2 < 1. Autocovariances include lag 0
//! (which carries the variance information identifying theta1^2 + theta2^2)
//! and use the divisor-n convention.

use crate::error::{Error, Result};
use crate::model::{ParamVector, SimulatorModel, SummaryVector};
use nalgebra::DVector;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

/// Area of the invertibility triangle (vertices (-2,1), (2,1), (0,-1)).
const TRIANGLE_AREA: f64 = 4.0;

#[derive(Debug, Clone, Copy)]
pub struct Ma2Model {
    /// Series length.
    pub n: usize,
    /// Number of autocovariance lags, 0..lags-1.
    pub lags: usize,
}

impl Ma2Model {
    pub fn new(n: usize) -> Self {
        Ma2Model { n, lags: 20 }
    }

    pub fn in_triangle(theta1: f64, theta2: f64) -> bool {
        theta2 > -1.0 && theta2 < 1.0 && theta1 + theta2 > -1.0 && theta1 - theta2 < 1.0
    }

    /// Simulate a raw series of length n.
    pub fn simulate_series(&self, theta: &ParamVector, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let (t1, t2) = (theta[0], theta[1]);
        let mut z_prev2: f64 = StandardNormal.sample(rng);
        let mut z_prev1: f64 = StandardNormal.sample(rng);
        let mut series = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            let z: f64 = StandardNormal.sample(rng);
            series.push(z + t1 * z_prev1 + t2 * z_prev2);
            z_prev2 = z_prev1;
            z_prev1 = z;
        }
        series
    }

    /// Sample autocovariances c_k = (1/n) sum (y_t - ybar)(y_{t-k} - ybar),
    /// k = 0..lags-1.
    pub fn autocovariances(&self, series: &[f64]) -> SummaryVector {
        let n = series.len();
        let mean = series.iter().sum::<f64>() / n as f64;
        let centered: Vec<f64> = series.iter().map(|y| y - mean).collect();
        let mut acov = DVector::zeros(self.lags);
        for k in 0..self.lags {
            let mut acc = 0.0;
            for t in k..n {
                acc += centered[t] * centered[t - k];
            }
            acov[k] = acc / n as f64;
        }
        acov
    }
}

impl SimulatorModel for Ma2Model {
    fn dim_theta(&self) -> usize {
        2
    }
    fn dim_summary(&self) -> usize {
        self.lags
    }
    fn sample_size(&self) -> usize {
        self.n
    }

    fn simulate_summary(
        &self,
        theta: &ParamVector,
        rng: &mut ChaCha8Rng,
    ) -> Result<SummaryVector> {
        if !self.in_support(theta) {
            return Err(Error::OutOfSupport);
        }
        if self.n <= self.lags {
            return Err(Error::Precondition(format!(
                "series length {} must exceed lag count {}",
                self.n, self.lags
            )));
        }
        let series = self.simulate_series(theta, rng);
        Ok(self.autocovariances(&series))
    }

    fn prior_log_density(&self, theta: &ParamVector) -> f64 {
        if self.in_support(theta) {
            -TRIANGLE_AREA.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn prior_sample(&self, rng: &mut ChaCha8Rng) -> ParamVector {
        let u1 = Uniform::new(-2.0, 2.0);
        let u2 = Uniform::new(-1.0, 1.0);
        loop {
            let t1 = u1.sample(rng);
            let t2 = u2.sample(rng);
            if Ma2Model::in_triangle(t1, t2) {
                return DVector::from_vec(vec![t1, t2]);
            }
        }
    }

    fn in_support(&self, theta: &ParamVector) -> bool {
        Ma2Model::in_triangle(theta[0], theta[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn autocovariances_match_theory() {
        // theta = (0.6, 0.2): c0 = 1.4, c1 = 0.72, c2 = 0.2, c3+ = 0.
        let model = Ma2Model::new(100_000);
        let theta = DVector::from_vec(vec![0.6, 0.2]);
        let mut rng = RngStream::root(5).rng();
        let s = model.simulate_summary(&theta, &mut rng).unwrap();
        assert!((s[0] - 1.4).abs() < 0.02, "c0 {}", s[0]);
        assert!((s[1] - 0.72).abs() < 0.02, "c1 {}", s[1]);
        assert!((s[2] - 0.2).abs() < 0.02, "c2 {}", s[2]);
        for k in 3..20 {
            assert!(s[k].abs() < 0.02, "c{k} {}", s[k]);
        }
    }

    #[test]
    fn white_noise_case() {
        let model = Ma2Model::new(50_000);
        let theta = DVector::from_vec(vec![0.0, 0.0]);
        let mut rng = RngStream::root(6).rng();
        let s = model.simulate_summary(&theta, &mut rng).unwrap();
        assert!((s[0] - 1.0).abs() < 0.03);
        for k in 1..20 {
            assert!(s[k].abs() < 0.03);
        }
    }

    #[test]
    fn support_region() {
        assert!(Ma2Model::in_triangle(0.6, 0.2));
        // (1.5, 0.8): theta1 - theta2 = 0.7 < 1, theta1 + theta2 = 2.3 > -1,
        // |theta2| < 1 => inside.
        assert!(Ma2Model::in_triangle(1.5, 0.8));
        assert!(!Ma2Model::in_triangle(1.5, 0.2));
        assert!(!Ma2Model::in_triangle(0.0, 1.0));
        assert!(!Ma2Model::in_triangle(-1.0, 0.0));
    }

    #[test]
    fn prior_samples_in_support() {
        let model = Ma2Model::new(100);
        let mut rng = RngStream::root(7).rng();
        for _ in 0..1000 {
            let t = model.prior_sample(&mut rng);
            assert!(model.in_support(&t));
        }
    }
}
