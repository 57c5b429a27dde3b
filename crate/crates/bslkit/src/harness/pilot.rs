//! Pilot runs used to build proposals for the reported chains and the
//! importance samplers.

use crate::adjust::{posterior_moments, PosteriorMoments};
use crate::error::{Error, Result};
use crate::model::{ParamVector, SimulatorModel, SummaryVector};
use crate::rng::{spawn_stream, RngStream};
use crate::samplers::pm_rw_mh;
use crate::synlik::{estimated_log_synlik, CovarianceSpec};
use nalgebra::DMatrix;

/// Score `tries` prior draws by one likelihood estimate each and return the
/// best as a chain start.
pub fn best_prior_init(
    model: &dyn SimulatorModel,
    s_obs: &SummaryVector,
    m: usize,
    spec: CovarianceSpec,
    tries: usize,
    rng: RngStream,
) -> Result<ParamVector> {
    let mut best: Option<(f64, ParamVector)> = None;
    for i in 0..tries {
        let stream = spawn_stream(rng, i as u64);
        let theta = model.prior_sample(&mut stream.rng());
        let ll = match estimated_log_synlik(model, &theta, m, spec, s_obs, stream) {
            Ok((ll, _)) => ll,
            Err(Error::DegenerateSummary(_)) | Err(Error::DegenerateSummaryCoordinate { .. }) => {
                continue
            }
            Err(e) => return Err(e),
        };
        if ll.is_finite() && best.as_ref().map(|(b, _)| ll > *b).unwrap_or(true) {
            best = Some((ll, theta));
        }
    }
    best.map(|(_, theta)| theta)
        .ok_or(Error::ChainInit { attempts: tries })
}

/// Pilot pseudo-marginal chain with an isotropic random walk; returns the
/// posterior moments of the second half.
pub fn pilot_moments(
    model: &dyn SimulatorModel,
    s_obs: &SummaryVector,
    m: usize,
    spec: CovarianceSpec,
    init: &ParamVector,
    rw_sd: &[f64],
    iters: usize,
    rng: RngStream,
) -> Result<PosteriorMoments> {
    let d = model.dim_theta();
    let mut rw_cov = DMatrix::zeros(d, d);
    for k in 0..d {
        rw_cov[(k, k)] = rw_sd[k] * rw_sd[k];
    }
    let chain = pm_rw_mh(model, s_obs, m, spec, init, &rw_cov, iters, rng)?;
    posterior_moments(&chain.burned(0.5))
}

/// Optimally scaled random-walk covariance (2.38^2 / d) * cov.
pub fn scaled_rw_cov(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let d = cov.nrows() as f64;
    cov * (2.38 * 2.38 / d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::toy::ToyModel;
    use nalgebra::DVector;

    #[test]
    fn pilot_finds_toy_posterior_region() {
        let model = ToyModel::new(20);
        let rng = RngStream::root(21);
        let mut data_rng = spawn_stream(rng, 0).rng();
        let (_, s_obs) = model.generate_data(&mut data_rng);
        let init = best_prior_init(
            &model,
            &s_obs,
            30,
            CovarianceSpec::Analytic(1.0),
            30,
            spawn_stream(rng, 1),
        )
        .unwrap();
        let moments = pilot_moments(
            &model,
            &s_obs,
            30,
            CovarianceSpec::Analytic(1.0),
            &init,
            &[0.5],
            2000,
            spawn_stream(rng, 2),
        )
        .unwrap();
        // posterior concentrates near ybar with sd ~ sqrt(ybar/n)
        assert!(
            (moments.mean[0] - s_obs[0]).abs() < 1.0,
            "pilot mean {} vs ybar {}",
            moments.mean[0],
            s_obs[0]
        );
        assert!(moments.cov[(0, 0)] > 0.0);
    }

    #[test]
    fn best_init_in_support() {
        let model = ToyModel::new(20);
        let s_obs = DVector::from_element(1, 5.0);
        let init = best_prior_init(
            &model,
            &s_obs,
            20,
            CovarianceSpec::Full,
            20,
            RngStream::root(8),
        )
        .unwrap();
        assert!(model.in_support(&init));
    }
}
