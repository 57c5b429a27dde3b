//! Rejection-sampler acceptance-rate stability across sample sizes.
//!
//! With a proposal whose scale shrinks like n^{-1/2} and a simulation budget
//! m(n) = ceil(c0 n^{gamma/2}), the acceptance rate should stabilize as n
//! grows. Two contrast runs are included: a proposal whose scale does not
//! shrink (rate decays), and a constant small m (rates vary more).

use crate::error::Result;
use crate::harness::config::{AcceptanceRateConfig, RunSettings};
use crate::harness::io::{ensure_dir, write_json};
use crate::harness::write_meta;
use crate::model::SimulatorModel;
use crate::models::toy::ToyModel;
use crate::rng::{spawn_stream, RngStream};
use crate::samplers::{rejection_bsl, GaussianProposal};
use crate::synlik::{estimated_log_synlik, CovarianceSpec};
use nalgebra::DMatrix;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct RatePoint {
    pub n: usize,
    pub m: usize,
    pub proposal_sd: f64,
    pub rate: f64,
    pub accepted: usize,
    pub proposals: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AcceptanceReport {
    pub main: Vec<RatePoint>,
    pub control: Vec<RatePoint>,
    pub fixed_m: Vec<RatePoint>,
    /// max rate / min rate in the main run.
    pub main_ratio: f64,
    pub fixed_m_ratio: f64,
    /// Least-squares slope of log rate vs log n for the non-shrinking
    /// proposal.
    pub control_slope: f64,
}

/// Least-squares slope of log y on log x.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn run_one(
    cfg: &AcceptanceRateConfig,
    n: usize,
    m: usize,
    proposal_sd: f64,
    rep: RngStream,
) -> Result<RatePoint> {
    let model = ToyModel::new(n);
    let (_, s_obs) = model.generate_data(&mut spawn_stream(rep, 0).rng());
    let proposal = GaussianProposal::new(
        s_obs.clone(),
        DMatrix::from_element(1, 1, proposal_sd * proposal_sd),
    )?;

    // pilot scan of the proposal to set the rejection bound
    let mut pilot_rng = spawn_stream(rep, 1).rng();
    let pilot_stream = spawn_stream(rep, 2);
    let mut max_ll = f64::NEG_INFINITY;
    for i in 0..cfg.pilot_draws {
        let theta = proposal.sample(&mut pilot_rng);
        if !model.in_support(&theta) {
            continue;
        }
        let (ll, _) = estimated_log_synlik(
            &model,
            &theta,
            m,
            CovarianceSpec::Full,
            &s_obs,
            spawn_stream(pilot_stream, i as u64),
        )?;
        if ll.is_finite() && ll > max_ll {
            max_ll = ll;
        }
    }
    let bound = max_ll + cfg.slack_nats;

    let sample = rejection_bsl(
        &model,
        &s_obs,
        m,
        CovarianceSpec::Full,
        &proposal,
        bound,
        cfg.n_prop,
        spawn_stream(rep, 3),
    )?;
    Ok(RatePoint {
        n,
        m,
        proposal_sd,
        rate: sample.acceptance_rate,
        accepted: sample.accepted.nrows(),
        proposals: cfg.n_prop,
    })
}

pub fn run_acceptance_experiment(
    cfg: &AcceptanceRateConfig,
    settings: &RunSettings,
) -> Result<AcceptanceReport> {
    cfg.validate()?;
    let dir = settings.out_dir.join("acceptance_rate");
    ensure_dir(&dir)?;
    write_meta(&dir, "acceptance_rate", settings.seed, cfg)?;
    let root = RngStream::root(settings.seed);

    let theta0 = 5.0;
    let m_of = |n: usize| ((cfg.c0 * (n as f64).powf(cfg.gamma_exp / 2.0)).ceil() as usize).max(2);
    // shrinking scale per Assumption-7; the control freezes the first rung's
    let sd_of = |n: usize| cfg.prop_scale * (theta0 / n as f64).sqrt();
    let frozen_sd = sd_of(cfg.n_ladder[0]);

    let mut main = Vec::new();
    let mut control = Vec::new();
    let mut fixed_m = Vec::new();
    for (idx, &n) in cfg.n_ladder.iter().enumerate() {
        let base = spawn_stream(root, idx as u64);
        main.push(run_one(cfg, n, m_of(n), sd_of(n), spawn_stream(base, 0))?);
        control.push(run_one(cfg, n, m_of(n), frozen_sd, spawn_stream(base, 1))?);
        fixed_m.push(run_one(cfg, n, cfg.fixed_m, sd_of(n), spawn_stream(base, 2))?);
    }

    let ratio = |points: &[RatePoint]| {
        let max = points.iter().map(|p| p.rate).fold(f64::NEG_INFINITY, f64::max);
        let min = points.iter().map(|p| p.rate).fold(f64::INFINITY, f64::min);
        max / min
    };
    let ns: Vec<f64> = control.iter().map(|p| p.n as f64).collect();
    let control_rates: Vec<f64> = control.iter().map(|p| p.rate).collect();
    let report = AcceptanceReport {
        main_ratio: ratio(&main),
        fixed_m_ratio: ratio(&fixed_m),
        control_slope: log_log_slope(&ns, &control_rates),
        main,
        control,
        fixed_m,
    };

    let mut writer = csv::Writer::from_path(dir.join("rates.csv"))?;
    writer.write_record(["run", "n", "m", "proposal_sd", "rate"])?;
    for (name, points) in [
        ("main", &report.main),
        ("control", &report.control),
        ("fixed_m", &report.fixed_m),
    ] {
        for p in points {
            writer.write_record([
                name.to_string(),
                format!("{}", p.n),
                format!("{}", p.m),
                format!("{}", p.proposal_sd),
                format!("{}", p.rate),
            ])?;
        }
    }
    writer.flush()?;
    write_json(&dir.join("summary.json"), &report)?;
    Ok(report)
}
