//! Simulator model interface.

use crate::error::Result;
use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

/// Model parameter vector.
pub type ParamVector = DVector<f64>;
/// Summary statistic vector.
pub type SummaryVector = DVector<f64>;

/// A simulator model with a prior, a summary-statistic simulator and optional
/// analytic synthetic-likelihood ingredients.
///
/// Implementations must be callable from multiple threads; each caller owns
/// its own generator, so `&self` methods take `&mut ChaCha8Rng`.
pub trait SimulatorModel: Sync {
    /// Parameter dimension.
    fn dim_theta(&self) -> usize;
    /// Summary statistic dimension.
    fn dim_summary(&self) -> usize;
    /// Sample size n of the data the summary is computed from.
    fn sample_size(&self) -> usize;

    /// One summary-statistic draw S_n(z) with z simulated at `theta`.
    fn simulate_summary(&self, theta: &ParamVector, rng: &mut ChaCha8Rng)
        -> Result<SummaryVector>;

    /// Log prior density; -inf exactly when `theta` is outside the support.
    fn prior_log_density(&self, theta: &ParamVector) -> f64;

    /// Draw from the prior.
    fn prior_sample(&self, rng: &mut ChaCha8Rng) -> ParamVector;

    /// Prior support indicator.
    fn in_support(&self, theta: &ParamVector) -> bool;

    /// Known summary mean b(theta), when available.
    fn analytic_mean(&self, _theta: &ParamVector) -> Option<SummaryVector> {
        None
    }

    /// Known summary covariance, when available.
    fn analytic_cov(&self, _theta: &ParamVector) -> Option<DMatrix<f64>> {
        None
    }
}
