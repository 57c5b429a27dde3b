//! Sandwich-type adjustment of posterior samples.
//!
//! The adjusted draws are theta_bar + Gamma Omega^{1/2} Gamma^{-1/2}
//! (theta_q - theta_bar), where Omega estimates the variance of the gradient
//! of the log synthetic likelihood at the posterior mean. Gradients come from
//! a Gaussian-process emulator of the log-likelihood surface built on a Latin
//! hypercube design around the posterior mean; the per-design simulation
//! stats are cached once and recycled across the J simulated datasets.

use crate::error::{Error, Result};
use crate::gp::GpFit;
use crate::lhs::latin_hypercube;
use crate::linalg::{clamp_psd, sym_inv_sqrt, sym_sqrt, symmetrize};
use crate::model::{ParamVector, SimulatorModel, SummaryVector};
use crate::rng::{spawn_stream, RngStream};
use crate::synlik::{log_synlik, sample_mean_cov, simulate_batch, CovarianceSpec};
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

/// Posterior mean and covariance estimated from samples.
#[derive(Debug, Clone)]
pub struct PosteriorMoments {
    pub mean: ParamVector,
    pub cov: DMatrix<f64>,
}

/// Estimated Omega with the per-draw gradients it was built from.
#[derive(Debug, Clone)]
pub struct OmegaEstimate {
    pub omega: DMatrix<f64>,
    pub j: usize,
    /// J x d_theta gradient draws.
    pub gradients: DMatrix<f64>,
}

/// Latin-hypercube training design with cached per-point synthetic-likelihood
/// stats. Responses depend on the dataset being processed and are recomputed
/// per dataset; hyperparameters are refit each time.
#[derive(Debug, Clone)]
pub struct GpEmulator {
    pub design: Vec<ParamVector>,
    /// Per design point: estimated mean and working covariance from m sims.
    pub stats: Vec<(SummaryVector, DMatrix<f64>)>,
    pub theta_bar: ParamVector,
    pub delta: DVector<f64>,
    pub spec: CovarianceSpec,
    pub m: usize,
}

/// The adjusted sample set with the transform that produced it.
#[derive(Debug, Clone)]
pub struct AdjustmentResult {
    pub moments: PosteriorMoments,
    pub omega: DMatrix<f64>,
    /// Q x d_theta adjusted draws.
    pub adjusted: DMatrix<f64>,
    pub transform: DMatrix<f64>,
}

/// Sample mean and covariance (divisor Q-1) of a Q x d_theta sample matrix.
pub fn posterior_moments(samples: &DMatrix<f64>) -> Result<PosteriorMoments> {
    let q = samples.nrows();
    let d = samples.ncols();
    if q < d + 1 {
        return Err(Error::Precondition(format!(
            "need at least d+1 = {} samples, got {q}",
            d + 1
        )));
    }
    let mean = samples.row_mean().transpose();
    let mut cov = DMatrix::zeros(d, d);
    for i in 0..q {
        let c = samples.row(i).transpose() - &mean;
        cov += &c * c.transpose();
    }
    cov /= (q - 1) as f64;
    cov = symmetrize(&cov);
    if Cholesky::new(cov.clone()).is_none() {
        return Err(Error::SingularPosteriorCovariance {
            min_eig: nalgebra::SymmetricEigen::new(cov.clone()).eigenvalues.min(),
        });
    }
    Ok(PosteriorMoments { mean, cov })
}

/// Apply the affine adjustment to a sample matrix.
pub fn adjust_samples(
    samples: &DMatrix<f64>,
    moments: &PosteriorMoments,
    omega: &DMatrix<f64>,
) -> Result<AdjustmentResult> {
    let d = samples.ncols();
    if moments.mean.len() != d || omega.nrows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: omega.nrows(),
        });
    }
    let omega_half = sym_sqrt(omega)?;
    let gamma_inv_half = sym_inv_sqrt(&moments.cov)?;
    let transform = &moments.cov * omega_half * gamma_inv_half;
    let mut adjusted = DMatrix::zeros(samples.nrows(), d);
    for i in 0..samples.nrows() {
        let centered = samples.row(i).transpose() - &moments.mean;
        let row = &moments.mean + &transform * centered;
        adjusted.row_mut(i).copy_from(&row.transpose());
    }
    Ok(AdjustmentResult {
        moments: moments.clone(),
        omega: omega.clone(),
        adjusted,
        transform,
    })
}

/// Build the Latin hypercube training design on
/// [theta_bar - delta, theta_bar + delta] and cache per-point simulation
/// stats. Design points falling outside the prior support are re-drawn
/// within their hypercube cell, then pulled towards theta_bar if the cell
/// itself protrudes past a hard prior bound.
pub fn build_gp_emulator(
    model: &dyn SimulatorModel,
    theta_bar: &ParamVector,
    delta: &DVector<f64>,
    b: usize,
    m: usize,
    spec: CovarianceSpec,
    rng: RngStream,
) -> Result<GpEmulator> {
    let d = model.dim_theta();
    if b < 10 * d {
        return Err(Error::Precondition(format!(
            "training size B must be >= 10 d_theta = {}, got {b}",
            10 * d
        )));
    }
    if !model.in_support(theta_bar) {
        return Err(Error::OutOfSupport);
    }
    let lo = theta_bar - delta;
    let hi = theta_bar + delta;
    let mut design_rng = spawn_stream(rng, u64::MAX).rng();
    let raw = latin_hypercube(&lo, &hi, b, &mut design_rng)?;

    let mut design = Vec::with_capacity(b);
    for row in 0..b {
        let mut point = raw.row(row).transpose();
        if !model.in_support(&point) {
            // resample within the same cell
            let widths: Vec<f64> = (0..d).map(|k| (hi[k] - lo[k]) / b as f64).collect();
            let bins: Vec<f64> = (0..d)
                .map(|k| ((point[k] - lo[k]) / widths[k]).floor())
                .collect();
            let mut tries = 0;
            while !model.in_support(&point) && tries < 100 {
                for k in 0..d {
                    let u: f64 = design_rng.gen_range(0.0..1.0);
                    point[k] = lo[k] + (bins[k] + u) * widths[k];
                }
                tries += 1;
            }
            // cell entirely outside: shrink towards theta_bar
            while !model.in_support(&point) {
                point = theta_bar + (&point - theta_bar) * 0.5;
            }
        }
        design.push(point);
    }

    let stats: Vec<(SummaryVector, DMatrix<f64>)> = design
        .par_iter()
        .enumerate()
        .map(|(i, theta)| {
            let batch = simulate_batch(model, theta, m, spawn_stream(rng, i as u64))?;
            let (mean, _) = sample_mean_cov(&batch)?;
            let cov = crate::synlik::build_covariance(&batch, spec, model, theta)?;
            Ok((mean, cov))
        })
        .collect::<Result<_>>()?;

    Ok(GpEmulator {
        design,
        stats,
        theta_bar: theta_bar.clone(),
        delta: delta.clone(),
        spec,
        m,
    })
}

/// Gradient of the log synthetic likelihood surface at theta_bar for one
/// target summary: recompute responses from the cached stats, refit the GP,
/// and take central differences of the predictive mean with step
/// 1e-4 delta_k.
pub fn gp_fit_and_gradient(
    emulator: &GpEmulator,
    s_target: &SummaryVector,
    theta_bar: &ParamVector,
) -> Result<ParamVector> {
    let responses: Vec<f64> = emulator
        .stats
        .iter()
        .map(|(mean, cov)| log_synlik(s_target, mean, cov))
        .collect();
    if responses.iter().any(|l| !l.is_finite()) {
        return Err(Error::GpFit(
            "non-finite log-likelihood response at a training point".into(),
        ));
    }
    let fit = GpFit::fit(emulator.design.clone(), &responses)?;
    let steps = emulator.delta.map(|d| 1e-4 * d);
    Ok(fit.gradient(theta_bar, &steps))
}

fn omega_from_gradients(gradients: Vec<ParamVector>) -> OmegaEstimate {
    let j = gradients.len();
    let d = gradients[0].len();
    let mut mat = DMatrix::zeros(j, d);
    for (row, g) in gradients.iter().enumerate() {
        mat.row_mut(row).copy_from(&g.transpose());
    }
    let mean = mat.row_mean().transpose();
    let mut omega = DMatrix::zeros(d, d);
    for i in 0..j {
        let c = mat.row(i).transpose() - &mean;
        omega += &c * c.transpose();
    }
    omega /= (j - 1) as f64;
    // finite-J noise can break PSD at the 1e-12 level
    omega = clamp_psd(&symmetrize(&omega));
    OmegaEstimate {
        omega,
        j,
        gradients: mat,
    }
}

/// Estimate Omega assuming the model for the data is correct: simulate J
/// summaries at theta_bar and take the sample covariance of their gradients.
pub fn estimate_omega_model_correct(
    model: &dyn SimulatorModel,
    theta_bar: &ParamVector,
    j: usize,
    emulator: &GpEmulator,
    rng: RngStream,
) -> Result<OmegaEstimate> {
    let d = model.dim_theta();
    if j < d + 1 {
        return Err(Error::Precondition(format!(
            "J must be >= d_theta + 1 = {}, got {j}",
            d + 1
        )));
    }
    let gradients: Vec<ParamVector> = (0..j)
        .into_par_iter()
        .map(|idx| {
            let mut gen = spawn_stream(rng, idx as u64).rng();
            let s = model.simulate_summary(theta_bar, &mut gen)?;
            gp_fit_and_gradient(emulator, &s, theta_bar)
        })
        .collect::<Result<_>>()?;
    Ok(omega_from_gradients(gradients))
}

/// Estimate Omega without assuming the data model is correct: bootstrap the
/// observed (exchangeable) data and take gradients at the bootstrap
/// summaries.
pub fn estimate_omega_bootstrap(
    raw_data: &[f64],
    summary_fn: &(dyn Fn(&[f64]) -> SummaryVector + Sync),
    theta_bar: &ParamVector,
    j: usize,
    emulator: &GpEmulator,
    rng: RngStream,
) -> Result<OmegaEstimate> {
    let d = theta_bar.len();
    if j < d + 1 {
        return Err(Error::Precondition(format!(
            "J must be >= d_theta + 1 = {}, got {j}",
            d + 1
        )));
    }
    let n = raw_data.len();
    let gradients: Vec<ParamVector> = (0..j)
        .into_par_iter()
        .map(|idx| {
            let mut gen = spawn_stream(rng, idx as u64).rng();
            let resample: Vec<f64> = (0..n).map(|_| raw_data[gen.gen_range(0..n)]).collect();
            let s = summary_fn(&resample);
            gp_fit_and_gradient(emulator, &s, theta_bar)
        })
        .collect::<Result<_>>()?;
    Ok(omega_from_gradients(gradients))
}
