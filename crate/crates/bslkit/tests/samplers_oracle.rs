//! Cross-sampler agreement on the toy model against the quadrature oracle:
//! the pseudo-marginal chain, the importance sampler, and the rejection
//! sampler should all recover the same posterior (up to the O(1/m)
//! perturbation and Monte Carlo error).

use bslkit::harness::quadrature::toy_grid_posterior;
use bslkit::model::SimulatorModel;
use bslkit::models::toy::ToyModel;
use bslkit::rng::{spawn_stream, RngStream};
use bslkit::samplers::{
    importance_sample, pm_rw_mh, rejection_bsl, resample, GaussianProposal, WeightedSample,
};
use bslkit::synlik::{estimated_log_synlik, CovarianceSpec};
use nalgebra::{DMatrix, DVector};

struct Setup {
    model: ToyModel,
    s_obs: DVector<f64>,
    ref_mean: f64,
    ref_sd: f64,
    root: RngStream,
}

fn setup() -> Setup {
    let model = ToyModel::new(20);
    let root = RngStream::root(404);
    let (_, s_obs) = model.generate_data(&mut spawn_stream(root, 0).rng());
    let grid = toy_grid_posterior(&model, &s_obs, 1.0, 4001).unwrap();
    Setup {
        model,
        ref_mean: grid.mean(),
        ref_sd: grid.sd(),
        s_obs,
        root,
    }
}

const M: usize = 200;

#[test]
fn pseudo_marginal_chain_matches_quadrature() {
    let s = setup();
    let init = DVector::from_element(1, s.ref_mean);
    let rw = DMatrix::from_element(1, 1, (2.38 * s.ref_sd).powi(2));
    let chain = pm_rw_mh(
        &s.model,
        &s.s_obs,
        M,
        CovarianceSpec::Full,
        &init,
        &rw,
        60_000,
        spawn_stream(s.root, 1),
    )
    .unwrap();
    let draws = chain.burned(0.2);
    let q = draws.nrows() as f64;
    let mean = draws.column(0).sum() / q;
    let sd = (draws.column(0).iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (q - 1.0)).sqrt();
    assert!(
        (mean - s.ref_mean).abs() < 0.05,
        "chain mean {mean} vs quadrature {}",
        s.ref_mean
    );
    assert!(
        (sd - s.ref_sd).abs() < 0.05,
        "chain sd {sd} vs quadrature {}",
        s.ref_sd
    );
    assert!(
        (0.1..0.7).contains(&chain.acceptance_rate()),
        "acceptance {}",
        chain.acceptance_rate()
    );
}

fn wide_proposal(s: &Setup) -> GaussianProposal {
    GaussianProposal::new(
        DVector::from_element(1, s.ref_mean),
        DMatrix::from_element(1, 1, (2.0 * s.ref_sd).powi(2)),
    )
    .unwrap()
}

fn weighted_stats(ws: &WeightedSample) -> (f64, f64) {
    let mean = ws.weighted_mean()[0];
    let sd = ws.weighted_cov()[(0, 0)].sqrt();
    (mean, sd)
}

#[test]
fn importance_sampler_matches_quadrature() {
    let s = setup();
    let ws = importance_sample(
        &s.model,
        &s.s_obs,
        M,
        CovarianceSpec::Full,
        &wide_proposal(&s),
        20_000,
        spawn_stream(s.root, 2),
    )
    .unwrap();
    assert!(ws.ess > 5000.0, "ess {}", ws.ess);
    let (mean, sd) = weighted_stats(&ws);
    assert!((mean - s.ref_mean).abs() < 0.03, "IS mean {mean} vs {}", s.ref_mean);
    assert!((sd - s.ref_sd).abs() < 0.03, "IS sd {sd} vs {}", s.ref_sd);

    // multinomial resampling preserves the weighted mean
    let re = resample(&ws, 20_000, spawn_stream(s.root, 3)).unwrap();
    let rmean = re.column(0).sum() / re.nrows() as f64;
    assert!((rmean - mean).abs() < 0.02, "resampled mean {rmean} vs {mean}");
}

#[test]
fn rejection_sampler_matches_quadrature() {
    let s = setup();
    let proposal = wide_proposal(&s);
    // bound from a pilot scan plus slack
    let mut pilot_rng = spawn_stream(s.root, 4).rng();
    let pilot_stream = spawn_stream(s.root, 5);
    let mut max_ll = f64::NEG_INFINITY;
    for i in 0..500 {
        let theta = proposal.sample(&mut pilot_rng);
        if !s.model.in_support(&theta) {
            continue;
        }
        let (ll, _) = estimated_log_synlik(
            &s.model,
            &theta,
            M,
            CovarianceSpec::Full,
            &s.s_obs,
            spawn_stream(pilot_stream, i),
        )
        .unwrap();
        max_ll = max_ll.max(ll);
    }
    let sample = rejection_bsl(
        &s.model,
        &s.s_obs,
        M,
        CovarianceSpec::Full,
        &proposal,
        max_ll + 2.0,
        60_000,
        spawn_stream(s.root, 6),
    )
    .unwrap();
    assert!(sample.accepted.nrows() > 1000, "accepted {}", sample.accepted.nrows());

    // accepted draws are likelihood-weighted by q; reweight by pi/q
    let lw = sample.log_reweights.as_slice();
    let max_lw = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lw.iter().map(|l| (l - max_lw).exp()).collect();
    let wsum: f64 = w.iter().sum();
    let mean: f64 = sample
        .accepted
        .column(0)
        .iter()
        .zip(&w)
        .map(|(x, wi)| x * wi)
        .sum::<f64>()
        / wsum;
    assert!(
        (mean - s.ref_mean).abs() < 0.05,
        "rejection mean {mean} vs quadrature {}",
        s.ref_mean
    );
}
