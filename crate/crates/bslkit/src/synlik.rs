//! Synthetic likelihood estimation.
//!
//! The log synthetic likelihood is the multivariate normal log-density of the
//! observed summary at an estimated (or analytic) mean and covariance. The
//! constant -(d/2) log 2pi is kept so values are true log-densities; the
//! rejection sampler bound and the variance diagnostic both rely on that.

use crate::error::{Error, Result};
use crate::linalg::{cholesky_with_nugget, log_det, symmetrize};
use crate::model::{ParamVector, SimulatorModel, SummaryVector};
use crate::rng::{spawn_stream, RngStream};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicU64, Ordering};

/// Covariance regime used inside the synthetic likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CovarianceSpec {
    /// Sample covariance of the m simulated summaries.
    Full,
    /// Warton shrinkage towards a diagonal target with parameter gamma in [0,1];
    /// gamma = 1 is the sample covariance, gamma = 0 its diagonal.
    Shrinkage(f64),
    /// Diagonal matrix of sample variances.
    Diagonal,
    /// Scaled analytic covariance: scale * model.analytic_cov(theta).
    /// A scale below one deliberately misspecifies the variance model.
    Analytic(f64),
}

impl CovarianceSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            CovarianceSpec::Shrinkage(g) if !(0.0..=1.0).contains(g) => {
                Err(Error::Precondition(format!(
                    "shrinkage gamma must lie in [0,1], got {g}"
                )))
            }
            CovarianceSpec::Analytic(s) if *s <= 0.0 => Err(Error::Precondition(format!(
                "analytic covariance scale must be positive, got {s}"
            ))),
            _ => Ok(()),
        }
    }
}

/// m simulated summaries stacked row-wise.
#[derive(Debug, Clone)]
pub struct SimBatch {
    /// m x d matrix of summary draws.
    pub draws: DMatrix<f64>,
}

impl SimBatch {
    pub fn m(&self) -> usize {
        self.draws.nrows()
    }
    pub fn dim(&self) -> usize {
        self.draws.ncols()
    }
}

/// Estimated synthetic-likelihood ingredients at one parameter value.
#[derive(Debug, Clone)]
pub struct SynLikEstimate {
    pub mean: SummaryVector,
    pub cov: DMatrix<f64>,
    pub log_lik: f64,
    pub log_det: f64,
    pub m_used: usize,
}

static DEGENERATE_COUNT: AtomicU64 = AtomicU64::new(0);

/// Number of covariance evaluations that stayed non-PSD after the nugget
/// retry and were mapped to a -inf log-likelihood.
pub fn degenerate_count() -> u64 {
    DEGENERATE_COUNT.load(Ordering::Relaxed)
}

/// Draw m independent summaries at `theta`.
pub fn simulate_batch(
    model: &dyn SimulatorModel,
    theta: &ParamVector,
    m: usize,
    rng: RngStream,
) -> Result<SimBatch> {
    if !model.in_support(theta) {
        return Err(Error::OutOfSupport);
    }
    if m < 2 {
        return Err(Error::Precondition(format!("m must be >= 2, got {m}")));
    }
    let d = model.dim_summary();
    let mut draws = DMatrix::zeros(m, d);
    let mut gen = rng.rng();
    for i in 0..m {
        let s = model.simulate_summary(theta, &mut gen)?;
        draws.row_mut(i).copy_from(&s.transpose());
    }
    Ok(SimBatch { draws })
}

/// Sample mean and unbiased (divisor m-1) sample covariance of a batch.
pub fn sample_mean_cov(batch: &SimBatch) -> Result<(SummaryVector, DMatrix<f64>)> {
    let m = batch.m();
    if m < 2 {
        return Err(Error::Precondition(format!("m must be >= 2, got {m}")));
    }
    let d = batch.dim();
    let mean = batch.draws.row_mean().transpose();
    let mut cov = DMatrix::zeros(d, d);
    for i in 0..m {
        let centered = batch.draws.row(i).transpose() - &mean;
        cov.syger(1.0, &centered, &centered, 1.0);
    }
    cov /= (m - 1) as f64;
    // syger fills the lower triangle only
    for r in 0..d {
        for c in (r + 1)..d {
            cov[(r, c)] = cov[(c, r)];
        }
    }
    Ok((mean, cov))
}

/// Build the working covariance for a given [`CovarianceSpec`].
pub fn build_covariance(
    batch: &SimBatch,
    spec: CovarianceSpec,
    model: &dyn SimulatorModel,
    theta: &ParamVector,
) -> Result<DMatrix<f64>> {
    spec.validate()?;
    match spec {
        CovarianceSpec::Full => Ok(sample_mean_cov(batch)?.1),
        CovarianceSpec::Diagonal => {
            let (_, cov) = sample_mean_cov(batch)?;
            Ok(DMatrix::from_diagonal(&cov.diagonal()))
        }
        CovarianceSpec::Shrinkage(gamma) => {
            let (_, cov) = sample_mean_cov(batch)?;
            shrink_covariance(&cov, gamma)
        }
        CovarianceSpec::Analytic(scale) => {
            let cov = model.analytic_cov(theta).ok_or(Error::NoAnalyticForm)?;
            Ok(cov * scale)
        }
    }
}

/// Warton shrinkage D^{1/2} { gamma C + (1-gamma) I } D^{1/2} applied to a
/// sample covariance. Preserves the diagonal for every gamma.
pub fn shrink_covariance(cov: &DMatrix<f64>, gamma: f64) -> Result<DMatrix<f64>> {
    let d = cov.nrows();
    let mut sd = DVector::zeros(d);
    for i in 0..d {
        let v = cov[(i, i)];
        if v <= 0.0 {
            return Err(Error::DegenerateSummaryCoordinate { index: i });
        }
        sd[i] = v.sqrt();
    }
    let mut out = DMatrix::zeros(d, d);
    for r in 0..d {
        for c in 0..d {
            if r == c {
                out[(r, c)] = cov[(r, c)];
            } else {
                let corr = cov[(r, c)] / (sd[r] * sd[c]);
                out[(r, c)] = gamma * corr * sd[r] * sd[c];
            }
        }
    }
    Ok(symmetrize(&out))
}

/// Multivariate normal log-density of `s_obs` at (mean, cov).
///
/// Returns -inf (and bumps the degenerate counter) when the covariance stays
/// non-PSD after the nugget retry, so pseudo-marginal proposals carrying a
/// degenerate covariance are rejected rather than aborting the chain.
pub fn log_synlik(s_obs: &SummaryVector, mean: &SummaryVector, cov: &DMatrix<f64>) -> f64 {
    let d = s_obs.len();
    debug_assert_eq!(mean.len(), d);
    debug_assert_eq!(cov.nrows(), d);
    let chol = match cholesky_with_nugget(cov) {
        Some(c) => c,
        None => {
            DEGENERATE_COUNT.fetch_add(1, Ordering::Relaxed);
            return f64::NEG_INFINITY;
        }
    };
    let ld = log_det(&chol);
    let resid = s_obs - mean;
    let white = chol.l_dirty().solve_lower_triangular(&resid).expect("triangular solve");
    let quad = white.norm_squared();
    -0.5 * (d as f64) * (2.0 * std::f64::consts::PI).ln() - 0.5 * ld - 0.5 * quad
}

/// Simulate a batch, build the working covariance and evaluate the log
/// synthetic likelihood. This is the non-negative pseudo-marginal estimate
/// (on the log scale) driving the samplers.
pub fn estimated_log_synlik(
    model: &dyn SimulatorModel,
    theta: &ParamVector,
    m: usize,
    spec: CovarianceSpec,
    s_obs: &SummaryVector,
    rng: RngStream,
) -> Result<(f64, SynLikEstimate)> {
    let batch = simulate_batch(model, theta, m, rng)?;
    let (mean, _) = sample_mean_cov(&batch)?;
    let cov = build_covariance(&batch, spec, model, theta)?;
    let chol_ld = cholesky_with_nugget(&cov).map(|c| log_det(&c));
    let ll = log_synlik(s_obs, &mean, &cov);
    Ok((
        ll,
        SynLikEstimate {
            mean,
            cov,
            log_lik: ll,
            log_det: chol_ld.unwrap_or(f64::NAN),
            m_used: m,
        },
    ))
}

/// Idealized synthetic likelihood using the model's analytic mean and a
/// (possibly deliberately scaled) analytic covariance.
pub fn analytic_log_synlik(
    model: &dyn SimulatorModel,
    theta: &ParamVector,
    s_obs: &SummaryVector,
    scale: f64,
) -> Result<f64> {
    let mean = model.analytic_mean(theta).ok_or(Error::NoAnalyticForm)?;
    let cov = model.analytic_cov(theta).ok_or(Error::NoAnalyticForm)? * scale;
    Ok(log_synlik(s_obs, &mean, &cov))
}

/// Sample variance of R independent estimated log-likelihood evaluations at
/// a fixed parameter value; used to tune m so the variance sits in the 1-3
/// band appropriate for pseudo-marginal sampling.
pub fn loglik_variance_diagnostic(
    model: &dyn SimulatorModel,
    theta: &ParamVector,
    m: usize,
    reps: usize,
    spec: CovarianceSpec,
    s_obs: &SummaryVector,
    rng: RngStream,
) -> Result<f64> {
    if reps < 20 {
        return Err(Error::Precondition(format!("R must be >= 20, got {reps}")));
    }
    let mut vals = Vec::with_capacity(reps);
    let mut failures = 0usize;
    for r in 0..reps {
        let (ll, _) = estimated_log_synlik(model, theta, m, spec, s_obs, spawn_stream(rng, r as u64))?;
        if ll.is_finite() {
            vals.push(ll);
        } else {
            failures += 1;
        }
    }
    if failures > 0 {
        return Err(Error::DiagnosticFailures {
            failures,
            total: reps,
        });
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    Ok(vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0))
}
