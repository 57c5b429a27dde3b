//! Individual-based toad movement model.
//!
//! Each toad starts at its day-1 refuge (location 0). Every night it draws a
//! symmetric alpha-stable overnight displacement; with probability p0 it
//! instead returns to the refuge of a uniformly chosen earlier day. Summaries
//! are computed from absolute displacements at lags 1, 2, 4 and 8 days:
//! displacements under 10 metres count as returns, and the non-returns
//! contribute the log differences of adjacent deciles plus the median,
//! giving 12 numbers per lag and a 48-dimensional statistic.

use crate::error::{Error, Result};
use crate::model::{ParamVector, SimulatorModel, SummaryVector};
use crate::models::stable::standard_stable;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const LAGS: [usize; 4] = [1, 2, 4, 8];
pub const RETURN_THRESHOLD: f64 = 10.0;

#[derive(Debug, Clone, Copy)]
pub struct ToadModel {
    /// Number of toads.
    pub nt: usize,
    /// Number of days.
    pub nd: usize,
}

impl Default for ToadModel {
    fn default() -> Self {
        ToadModel { nt: 66, nd: 63 }
    }
}

impl ToadModel {
    pub fn new(nt: usize, nd: usize) -> Self {
        ToadModel { nt, nd }
    }

    fn check_support(theta: &ParamVector) -> bool {
        let (alpha, delta, p0) = (theta[0], theta[1], theta[2]);
        alpha > 1.0 && alpha < 2.0 && delta > 0.0 && delta < 100.0 && p0 > 0.0 && p0 < 0.9
    }

    /// Simulate the nd x nt location matrix.
    pub fn simulate_paths(
        &self,
        theta: &ParamVector,
        rng: &mut ChaCha8Rng,
    ) -> Result<DMatrix<f64>> {
        if !Self::check_support(theta) {
            return Err(Error::OutOfSupport);
        }
        let (alpha, delta, p0) = (theta[0], theta[1], theta[2]);
        let mut locations = DMatrix::zeros(self.nd, self.nt);
        let mut history = Vec::with_capacity(self.nd);
        for toad in 0..self.nt {
            history.clear();
            history.push(0.0f64);
            for day in 1..self.nd {
                let moved = history[day - 1] + delta * standard_stable(alpha, rng);
                let site = if rng.gen_range(0.0..1.0) < p0 {
                    history[rng.gen_range(0..day)]
                } else {
                    moved
                };
                history.push(site);
            }
            for day in 0..self.nd {
                locations[(day, toad)] = history[day];
            }
        }
        Ok(locations)
    }

    /// 48-dimensional summary of a location matrix.
    ///
    /// Per lag, in order: return count, 10 log-differences of adjacent
    /// deciles of the non-return displacements, and their median.
    pub fn summaries(&self, locations: &DMatrix<f64>) -> Result<SummaryVector> {
        let nd = locations.nrows();
        let nt = locations.ncols();
        if nd < LAGS[LAGS.len() - 1] + 1 {
            return Err(Error::Precondition(format!(
                "need at least {} days of locations, got {nd}",
                LAGS[LAGS.len() - 1] + 1
            )));
        }
        let mut out = Vec::with_capacity(12 * LAGS.len());
        let mut non_returns = Vec::new();
        for &lag in &LAGS {
            non_returns.clear();
            let mut returns = 0usize;
            for toad in 0..nt {
                for day in 0..nd - lag {
                    let disp = (locations[(day + lag, toad)] - locations[(day, toad)]).abs();
                    if disp < RETURN_THRESHOLD {
                        returns += 1;
                    } else {
                        non_returns.push(disp);
                    }
                }
            }
            if non_returns.is_empty() {
                return Err(Error::DegenerateSummary(format!(
                    "no non-return displacements at lag {lag}"
                )));
            }
            non_returns.sort_by(|a, b| a.partial_cmp(b).unwrap());
            out.push(returns as f64);
            let deciles: Vec<f64> = (0..=10)
                .map(|k| quantile_sorted(&non_returns, k as f64 / 10.0))
                .collect();
            for k in 0..10 {
                let gap = deciles[k + 1] - deciles[k];
                if gap <= 0.0 {
                    return Err(Error::DegenerateSummary(format!(
                        "nonpositive quantile gap at lag {lag}, decile {k}"
                    )));
                }
                out.push(gap.ln());
            }
            out.push(quantile_sorted(&non_returns, 0.5));
        }
        Ok(DVector::from_vec(out))
    }
}

/// Quantile with linear interpolation between order statistics; p = 0 is the
/// minimum, p = 1 the maximum.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi.min(n - 1)] - sorted[lo])
}

impl SimulatorModel for ToadModel {
    fn dim_theta(&self) -> usize {
        3
    }
    fn dim_summary(&self) -> usize {
        12 * LAGS.len()
    }
    fn sample_size(&self) -> usize {
        self.nt * self.nd
    }

    fn simulate_summary(
        &self,
        theta: &ParamVector,
        rng: &mut ChaCha8Rng,
    ) -> Result<SummaryVector> {
        let paths = self.simulate_paths(theta, rng)?;
        self.summaries(&paths)
    }

    fn prior_log_density(&self, theta: &ParamVector) -> f64 {
        if Self::check_support(theta) {
            // uniform over (1,2) x (0,100) x (0,0.9)
            -(1.0f64 * 100.0 * 0.9).ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn prior_sample(&self, rng: &mut ChaCha8Rng) -> ParamVector {
        DVector::from_vec(vec![
            rng.gen_range(1.0..2.0),
            rng.gen_range(0.0..100.0),
            rng.gen_range(0.0..0.9),
        ])
    }

    fn in_support(&self, theta: &ParamVector) -> bool {
        Self::check_support(theta)
    }
}
