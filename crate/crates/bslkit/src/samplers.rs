//! Posterior samplers: pseudo-marginal random-walk Metropolis-Hastings,
//! Gaussian-proposal importance sampling, and rejection sampling.

use crate::error::{Error, Result};
use crate::linalg::symmetrize;
use crate::model::{ParamVector, SimulatorModel, SummaryVector};
use crate::rng::{spawn_stream, RngStream};
use crate::synlik::{analytic_log_synlik, estimated_log_synlik, CovarianceSpec};
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// MCMC trace with acceptance metadata and a config echo.
#[derive(Debug, Clone)]
pub struct Chain {
    /// Q x d_theta retained states.
    pub draws: DMatrix<f64>,
    /// Pseudo-marginal log-likelihood estimate carried by each retained state.
    pub log_liks: DVector<f64>,
    pub accept_count: usize,
    /// Proposal evaluations that failed simulation and were rejected.
    pub sim_failures: usize,
    pub m: Option<usize>,
    pub spec: Option<CovarianceSpec>,
    pub rw_cov: DMatrix<f64>,
    pub stream: RngStream,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.draws.nrows()
    }
    pub fn is_empty(&self) -> bool {
        self.draws.nrows() == 0
    }
    pub fn acceptance_rate(&self) -> f64 {
        self.accept_count as f64 / self.len() as f64
    }
    /// Drop the first `frac` of the chain.
    pub fn burned(&self, frac: f64) -> DMatrix<f64> {
        let skip = ((self.len() as f64) * frac) as usize;
        self.draws.rows(skip, self.len() - skip).into_owned()
    }
}

/// Importance draws with log-weights and effective sample size.
#[derive(Debug, Clone)]
pub struct WeightedSample {
    /// N x d_theta draws.
    pub draws: DMatrix<f64>,
    pub log_weights: DVector<f64>,
    pub ess: f64,
}

impl WeightedSample {
    /// Normalized weights (sum to one).
    pub fn weights(&self) -> DVector<f64> {
        normalized_weights(&self.log_weights)
    }

    pub fn weighted_mean(&self) -> ParamVector {
        let w = self.weights();
        let d = self.draws.ncols();
        let mut mean = DVector::zeros(d);
        for i in 0..self.draws.nrows() {
            mean += self.draws.row(i).transpose() * w[i];
        }
        mean
    }

    pub fn weighted_cov(&self) -> DMatrix<f64> {
        let w = self.weights();
        let mean = self.weighted_mean();
        let d = self.draws.ncols();
        let mut cov = DMatrix::zeros(d, d);
        let mut w2 = 0.0;
        for i in 0..self.draws.nrows() {
            let c = self.draws.row(i).transpose() - &mean;
            cov += &c * c.transpose() * w[i];
            w2 += w[i] * w[i];
        }
        // unbiased under weighting
        symmetrize(&(cov / (1.0 - w2)))
    }
}

fn normalized_weights(log_weights: &DVector<f64>) -> DVector<f64> {
    let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return DVector::zeros(log_weights.len());
    }
    let mut w = log_weights.map(|lw| (lw - max).exp());
    let total = w.sum();
    w /= total;
    w
}

/// Multivariate normal proposal.
#[derive(Debug, Clone)]
pub struct GaussianProposal {
    pub mean: ParamVector,
    pub cov: DMatrix<f64>,
    chol: DMatrix<f64>,
    log_norm: f64,
}

impl GaussianProposal {
    pub fn new(mean: ParamVector, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        let chol = Cholesky::new(cov.clone()).ok_or(Error::Precondition(
            "proposal covariance must be positive definite".into(),
        ))?;
        let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>();
        let log_norm = -0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det;
        Ok(GaussianProposal {
            mean,
            cov,
            chol: chol.l().clone_owned(),
            log_norm,
        })
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> ParamVector {
        let z = DVector::from_fn(self.mean.len(), |_, _| StandardNormal.sample(rng));
        &self.mean + &self.chol * z
    }

    pub fn log_density(&self, theta: &ParamVector) -> f64 {
        let resid = theta - &self.mean;
        let white = self
            .chol
            .solve_lower_triangular(&resid)
            .expect("triangular solve");
        self.log_norm - 0.5 * white.norm_squared()
    }
}

/// Pseudo-marginal random-walk Metropolis-Hastings.
///
/// The proposal is theta' = theta + N(0, rw_cov). A fresh likelihood estimate
/// is drawn at theta' only; the estimate carried by the current state is
/// never refreshed, which is what makes the chain target the perturbed
/// posterior exactly. Proposals outside the prior support are rejected
/// without simulating.
pub fn pm_rw_mh(
    model: &dyn SimulatorModel,
    s_obs: &SummaryVector,
    m: usize,
    spec: CovarianceSpec,
    init: &ParamVector,
    rw_cov: &DMatrix<f64>,
    q: usize,
    rng: RngStream,
) -> Result<Chain> {
    let mut chain = run_rw_mh(
        model,
        |theta, idx| match estimated_log_synlik(model, theta, m, spec, s_obs, spawn_stream(rng, idx)) {
            Ok((ll, _)) => Ok(Some(ll)),
            Err(Error::DegenerateSummary(_)) | Err(Error::DegenerateSummaryCoordinate { .. }) => {
                Ok(None)
            }
            Err(e) => Err(e),
        },
        init,
        rw_cov,
        q,
        rng,
    )?;
    chain.m = Some(m);
    chain.spec = Some(spec);
    Ok(chain)
}

/// Random-walk Metropolis-Hastings on the idealized synthetic likelihood
/// (analytic mean and covariance, optionally scaled). Deterministic
/// likelihood, so this targets the idealized posterior.
pub fn ideal_rw_mh(
    model: &dyn SimulatorModel,
    s_obs: &SummaryVector,
    scale: f64,
    init: &ParamVector,
    rw_cov: &DMatrix<f64>,
    q: usize,
    rng: RngStream,
) -> Result<Chain> {
    run_rw_mh(
        model,
        |theta, _| analytic_log_synlik(model, theta, s_obs, scale).map(Some),
        init,
        rw_cov,
        q,
        rng,
    )
}

fn run_rw_mh<F>(
    model: &dyn SimulatorModel,
    mut loglik: F,
    init: &ParamVector,
    rw_cov: &DMatrix<f64>,
    q: usize,
    rng: RngStream,
) -> Result<Chain>
where
    F: FnMut(&ParamVector, u64) -> Result<Option<f64>>,
{
    if q < 1 {
        return Err(Error::Precondition("Q must be >= 1".into()));
    }
    if !model.in_support(init) {
        return Err(Error::OutOfSupport);
    }
    let chol = Cholesky::new(rw_cov.clone()).ok_or(Error::Precondition(
        "random-walk covariance must be positive definite".into(),
    ))?;
    let lower = chol.l();
    let d = init.len();

    // initial estimate, re-drawn on -inf up to 50 times
    let mut cur_ll = f64::NEG_INFINITY;
    let mut attempts = 0usize;
    while attempts < 50 {
        if let Some(ll) = loglik(init, u64::MAX - attempts as u64)? {
            if ll.is_finite() {
                cur_ll = ll;
                break;
            }
        }
        attempts += 1;
    }
    if !cur_ll.is_finite() {
        return Err(Error::ChainInit { attempts });
    }

    let mut walker = spawn_stream(rng, u64::MAX).rng();
    let mut cur = init.clone();
    let mut cur_prior = model.prior_log_density(&cur);
    let mut draws = DMatrix::zeros(q, d);
    let mut log_liks = DVector::zeros(q);
    let mut accept_count = 0usize;
    let mut sim_failures = 0usize;

    for it in 0..q {
        let z = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut walker));
        let proposal = &cur + &lower * z;
        if model.in_support(&proposal) {
            let prop_prior = model.prior_log_density(&proposal);
            match loglik(&proposal, it as u64)? {
                Some(prop_ll) => {
                    let log_alpha = (prop_ll - cur_ll) + (prop_prior - cur_prior);
                    let u: f64 = walker.gen_range(0.0..1.0);
                    if u.ln() < log_alpha {
                        cur = proposal;
                        cur_ll = prop_ll;
                        cur_prior = prop_prior;
                        accept_count += 1;
                    }
                }
                None => sim_failures += 1,
            }
        }
        draws.row_mut(it).copy_from(&cur.transpose());
        log_liks[it] = cur_ll;
    }

    Ok(Chain {
        draws,
        log_liks,
        accept_count,
        sim_failures,
        m: None,
        spec: None,
        rw_cov: rw_cov.clone(),
        stream: rng,
    })
}

/// Importance sampling against a Gaussian proposal.
pub fn importance_sample(
    model: &dyn SimulatorModel,
    s_obs: &SummaryVector,
    m: usize,
    spec: CovarianceSpec,
    proposal: &GaussianProposal,
    n: usize,
    rng: RngStream,
) -> Result<WeightedSample> {
    if n < 2 {
        return Err(Error::Precondition("N must be >= 2".into()));
    }
    let d = model.dim_theta();
    let mut draw_rng = spawn_stream(rng, u64::MAX).rng();
    let mut draws = DMatrix::zeros(n, d);
    let mut log_weights = DVector::from_element(n, f64::NEG_INFINITY);
    for i in 0..n {
        let theta = proposal.sample(&mut draw_rng);
        draws.row_mut(i).copy_from(&theta.transpose());
        if !model.in_support(&theta) {
            continue;
        }
        let ll = match estimated_log_synlik(model, &theta, m, spec, s_obs, spawn_stream(rng, i as u64))
        {
            Ok((ll, _)) => ll,
            Err(Error::DegenerateSummary(_)) | Err(Error::DegenerateSummaryCoordinate { .. }) => {
                continue
            }
            Err(e) => return Err(e),
        };
        if !ll.is_finite() {
            continue;
        }
        log_weights[i] = ll + model.prior_log_density(&theta) - proposal.log_density(&theta);
    }
    let e = ess(log_weights.as_slice())?;
    Ok(WeightedSample {
        draws,
        log_weights,
        ess: e,
    })
}

/// Effective sample size (sum w)^2 / sum w^2 of normalized weights.
pub fn ess(log_weights: &[f64]) -> Result<f64> {
    let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::ProposalMismatch {
            n: log_weights.len(),
        });
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for lw in log_weights {
        let w = (lw - max).exp();
        sum += w;
        sum_sq += w * w;
    }
    Ok(sum * sum / sum_sq)
}

/// Multinomial resampling by normalized weights; returns K x d_theta rows.
pub fn resample(ws: &WeightedSample, k: usize, rng: RngStream) -> Result<DMatrix<f64>> {
    if k < 1 {
        return Err(Error::Precondition("K must be >= 1".into()));
    }
    ess(ws.log_weights.as_slice())?;
    let w = ws.weights();
    let mut cdf = Vec::with_capacity(w.len());
    let mut acc = 0.0;
    for wi in w.iter() {
        acc += wi;
        cdf.push(acc);
    }
    let mut gen = rng.rng();
    let d = ws.draws.ncols();
    let mut out = DMatrix::zeros(k, d);
    for row in 0..k {
        let u: f64 = gen.gen_range(0.0..1.0);
        let idx = cdf.partition_point(|&c| c < u).min(w.len() - 1);
        out.row_mut(row).copy_from(&ws.draws.row(idx));
    }
    Ok(out)
}

/// Output of the rejection sampler.
#[derive(Debug, Clone)]
pub struct RejectionSample {
    /// Accepted draws, one row each.
    pub accepted: DMatrix<f64>,
    pub acceptance_rate: f64,
    /// Per-accept importance reweight log pi(theta') - log q(theta'),
    /// recovering the synthetic posterior from the q-weighted accepts.
    pub log_reweights: DVector<f64>,
}

/// Rejection sampling with a caller-supplied log upper bound on the density
/// estimate. Each proposal is accepted with probability
/// exp(log_lik_estimate - bound_log).
pub fn rejection_bsl(
    model: &dyn SimulatorModel,
    s_obs: &SummaryVector,
    m: usize,
    spec: CovarianceSpec,
    proposal: &GaussianProposal,
    bound_log: f64,
    n_prop: usize,
    rng: RngStream,
) -> Result<RejectionSample> {
    let mut draw_rng = spawn_stream(rng, u64::MAX).rng();
    let d = model.dim_theta();
    let mut accepted: Vec<f64> = Vec::new();
    let mut log_reweights = Vec::new();
    let mut max_observed = f64::NEG_INFINITY;
    for i in 0..n_prop {
        let theta = proposal.sample(&mut draw_rng);
        if !model.in_support(&theta) {
            continue;
        }
        let ll = match estimated_log_synlik(model, &theta, m, spec, s_obs, spawn_stream(rng, i as u64))
        {
            Ok((ll, _)) => ll,
            Err(Error::DegenerateSummary(_)) | Err(Error::DegenerateSummaryCoordinate { .. }) => {
                continue
            }
            Err(e) => return Err(e),
        };
        if ll > max_observed {
            max_observed = ll;
        }
        let u: f64 = draw_rng.gen_range(0.0..1.0);
        if u.ln() < ll - bound_log {
            accepted.extend(theta.iter());
            log_reweights.push(model.prior_log_density(&theta) - proposal.log_density(&theta));
        }
    }
    if max_observed > bound_log {
        return Err(Error::BoundViolated {
            max_observed,
            bound: bound_log,
        });
    }
    let n_acc = log_reweights.len();
    Ok(RejectionSample {
        accepted: DMatrix::from_row_slice(n_acc, d, &accepted),
        acceptance_rate: n_acc as f64 / n_prop as f64,
        log_reweights: DVector::from_vec(log_reweights),
    })
}
