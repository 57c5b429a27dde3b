//! Toy model: negative-binomial data analysed under a Poisson working model.
//!
//! The data are n i.i.d. NB(5, 0.5) counts (mean 5, variance 10); the working
//! model is Poisson(theta) with the sample mean as summary, so b(theta) =
//! theta and var(S | theta) = theta / n. The Gamma(2, 0.5) prior is conjugate
//! under the Poisson assumption, giving the exact posterior
//! Gamma(2 + n ybar, 0.5 + n) used as ground truth.

use crate::error::{Error, Result};
use crate::model::{ParamVector, SimulatorModel, SummaryVector};
use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};

pub const PRIOR_SHAPE: f64 = 2.0;
pub const PRIOR_RATE: f64 = 0.5;
/// NB size parameter r; success probability is 0.5.
const NB_SIZE: f64 = 5.0;
const NB_PROB: f64 = 0.5;

#[derive(Debug, Clone, Copy)]
pub struct ToyModel {
    pub n: usize,
}

impl Default for ToyModel {
    fn default() -> Self {
        ToyModel { n: 20 }
    }
}

impl ToyModel {
    pub fn new(n: usize) -> Self {
        ToyModel { n }
    }

    /// n draws from NB(5, 0.5) via the Gamma-Poisson mixture, plus the
    /// observed summary ybar.
    pub fn generate_data(&self, rng: &mut ChaCha8Rng) -> (Vec<f64>, SummaryVector) {
        let lambda = Gamma::new(NB_SIZE, (1.0 - NB_PROB) / NB_PROB).unwrap();
        let data: Vec<f64> = (0..self.n)
            .map(|_| {
                let l: f64 = lambda.sample(rng);
                Poisson::new(l.max(f64::MIN_POSITIVE)).unwrap().sample(rng)
            })
            .collect();
        let ybar = data.iter().sum::<f64>() / self.n as f64;
        (data, DVector::from_element(1, ybar))
    }

    /// Exact Gamma posterior (shape, rate) under the Poisson assumption.
    pub fn exact_posterior(&self, data: &[f64]) -> (f64, f64) {
        let total: f64 = data.iter().sum();
        (PRIOR_SHAPE + total, PRIOR_RATE + data.len() as f64)
    }

    /// Summary of a data vector (sample mean).
    pub fn summary(data: &[f64]) -> SummaryVector {
        DVector::from_element(1, data.iter().sum::<f64>() / data.len() as f64)
    }
}

impl SimulatorModel for ToyModel {
    fn dim_theta(&self) -> usize {
        1
    }
    fn dim_summary(&self) -> usize {
        1
    }
    fn sample_size(&self) -> usize {
        self.n
    }

    fn simulate_summary(
        &self,
        theta: &ParamVector,
        rng: &mut ChaCha8Rng,
    ) -> Result<SummaryVector> {
        let t = theta[0];
        if t <= 0.0 {
            return Err(Error::OutOfSupport);
        }
        // The mean of n iid Poisson(theta) draws equals Poisson(n*theta)/n
        // exactly in distribution.
        let total: f64 = Poisson::new(self.n as f64 * t).unwrap().sample(rng);
        Ok(DVector::from_element(1, total / self.n as f64))
    }

    fn prior_log_density(&self, theta: &ParamVector) -> f64 {
        let t = theta[0];
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        PRIOR_SHAPE * PRIOR_RATE.ln() - statrs::function::gamma::ln_gamma(PRIOR_SHAPE)
            + (PRIOR_SHAPE - 1.0) * t.ln()
            - PRIOR_RATE * t
    }

    fn prior_sample(&self, rng: &mut ChaCha8Rng) -> ParamVector {
        let g = Gamma::new(PRIOR_SHAPE, 1.0 / PRIOR_RATE).unwrap();
        DVector::from_element(1, g.sample(rng))
    }

    fn in_support(&self, theta: &ParamVector) -> bool {
        theta[0] > 0.0 && theta[0].is_finite()
    }

    fn analytic_mean(&self, theta: &ParamVector) -> Option<SummaryVector> {
        Some(DVector::from_element(1, theta[0]))
    }

    fn analytic_cov(&self, theta: &ParamVector) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_element(1, 1, theta[0] / self.n as f64))
    }
}

/// Gamma(shape, rate) log-density, used for exact-posterior grids.
pub fn gamma_log_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - statrs::function::gamma::ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn nb_mean_and_variance() {
        let model = ToyModel::new(1_000_000);
        let mut rng = RngStream::root(1).rng();
        let (data, s) = model.generate_data(&mut rng);
        let mean = s[0];
        assert!((mean - 5.0).abs() < 0.01, "mean {mean}");
        let var = data.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (data.len() - 1) as f64;
        assert!((var - 10.0).abs() < 0.05, "var {var}");
        assert!(data.iter().all(|&y| y >= 0.0 && y.fract() == 0.0));
    }

    #[test]
    fn summary_moments_match_analytic() {
        let model = ToyModel::new(20);
        let theta = DVector::from_element(1, 5.0);
        let mut rng = RngStream::root(2).rng();
        let reps = 100_000;
        let draws: Vec<f64> = (0..reps)
            .map(|_| model.simulate_summary(&theta, &mut rng).unwrap()[0])
            .collect();
        let mean = draws.iter().sum::<f64>() / reps as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        // E[S] = theta, var[S] = theta/n; 3 standard errors of slack.
        let se_mean = (5.0 / 20.0 / reps as f64).sqrt();
        assert!((mean - 5.0).abs() < 3.0 * se_mean, "mean {mean}");
        let se_var = (5.0 / 20.0) * (2.0 / reps as f64).sqrt();
        assert!((var - 0.25).abs() < 4.0 * se_var, "var {var}");
    }

    #[test]
    fn exact_posterior_formula() {
        let model = ToyModel::new(20);
        let data = vec![5.0; 20];
        let (shape, rate) = model.exact_posterior(&data);
        assert_eq!(shape, 102.0);
        assert_eq!(rate, 20.5);
        assert!((shape / rate - 4.9756).abs() < 1e-3);
        // ybar = 0 retains the prior shape
        let (shape0, rate0) = model.exact_posterior(&vec![0.0; 20]);
        assert_eq!(shape0, 2.0);
        assert_eq!(rate0, 20.5);
    }

    #[test]
    fn out_of_support_errors() {
        let model = ToyModel::default();
        let mut rng = RngStream::root(3).rng();
        assert!(model
            .simulate_summary(&DVector::from_element(1, -1.0), &mut rng)
            .is_err());
        assert_eq!(
            model.prior_log_density(&DVector::from_element(1, -1.0)),
            f64::NEG_INFINITY
        );
    }
}
