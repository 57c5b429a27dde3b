//! Convergence of the estimated posterior to the idealized posterior as the
//! per-evaluation simulation count m grows. The idealized reference is
//! computed by quadrature. The estimated posterior is also computed by
//! quadrature: its target density is prior(theta) x E[ghat(theta)], and the
//! expectation over the estimator is averaged from K replicates per grid
//! node, so no sampler noise enters the discrepancy. Rungs of the m-ladder
//! share simulations (each rung uses a prefix of the largest batch), which
//! couples their noise.

use crate::error::Result;
use crate::harness::acceptance_rate::log_log_slope;
use crate::harness::config::{MConvergenceConfig, RunSettings};
use crate::harness::io::{ensure_dir, write_columns_csv, write_json};
use crate::harness::quadrature::toy_grid_posterior;
use crate::harness::write_meta;
use crate::model::SimulatorModel;
use crate::models::toy::ToyModel;
use crate::rng::{spawn_stream, RngStream};
use nalgebra::DVector;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct MRow {
    pub m: usize,
    /// |estimated mean - idealized mean| averaged over seeds.
    pub mean_discrepancy: f64,
    /// |estimated sd - idealized sd| averaged over seeds.
    pub sd_discrepancy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MConvergenceReport {
    pub rows: Vec<MRow>,
    pub mean_slope: f64,
    pub sd_slope: f64,
    /// Quadrature self-check: reference mean recomputed on a doubled grid.
    pub control_discrepancy: f64,
}

struct SeedResult {
    mean_disc: Vec<f64>,
    sd_disc: Vec<f64>,
    control: f64,
}

/// Trapezoid mean and sd of an unnormalized density on a uniform grid.
fn grid_moments(grid: &[f64], dens: &[f64]) -> (f64, f64) {
    let g = grid.len();
    let w = |i: usize| if i == 0 || i == g - 1 { 0.5 } else { 1.0 };
    let norm: f64 = (0..g).map(|i| w(i) * dens[i]).sum();
    let mean: f64 = (0..g).map(|i| w(i) * grid[i] * dens[i]).sum::<f64>() / norm;
    let var: f64 =
        (0..g).map(|i| w(i) * (grid[i] - mean).powi(2) * dens[i]).sum::<f64>() / norm;
    (mean, var.sqrt())
}

fn run_seed(cfg: &MConvergenceConfig, rep: RngStream) -> Result<SeedResult> {
    let model = ToyModel::new(cfg.n);
    let (_, s_obs) = model.generate_data(&mut spawn_stream(rep, 0).rng());
    let reference = toy_grid_posterior(&model, &s_obs, 1.0, cfg.quad_points)?;
    let refined = toy_grid_posterior(&model, &s_obs, 1.0, 2 * cfg.quad_points - 1)?;
    let control = (reference.mean() - refined.mean()).abs();

    let g = cfg.grid_points;
    let k = cfg.k_replicates;
    let rungs = cfg.m_ladder.len();
    let m_max = *cfg.m_ladder.iter().max().unwrap();
    let lo = (reference.mean() - cfg.grid_span_sds * reference.sd()).max(1e-9);
    let hi = reference.mean() + cfg.grid_span_sds * reference.sd();
    let grid: Vec<f64> = (0..g)
        .map(|i| lo + (hi - lo) * i as f64 / (g - 1) as f64)
        .collect();

    // log of the averaged estimated likelihood, per rung per node. The inner
    // loop is written in scalar form with the Poisson distribution hoisted
    // per node: the d=1 matrix plumbing dominated the runtime otherwise.
    let s = s_obs[0];
    let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    let mut log_avg = vec![vec![0.0f64; g]; rungs];
    let mut lls = vec![Vec::with_capacity(k); rungs];
    for (gi, &t) in grid.iter().enumerate() {
        let theta = DVector::from_element(1, t);
        // same distribution as ToyModel::simulate_summary: the mean of n iid
        // Poisson(theta) draws is Poisson(n theta)/n exactly
        let pois = Poisson::new(cfg.n as f64 * t).map_err(|e| {
            crate::error::Error::Precondition(format!("poisson rate {t}: {e}"))
        })?;
        let mut rng = spawn_stream(rep, 1 + gi as u64).rng();
        for row in lls.iter_mut() {
            row.clear();
        }
        for _ in 0..k {
            // Welford running mean/M2 over one batch of m_max summaries,
            // read off at each ladder rung (rungs share the prefix draws)
            let mut mean = 0.0f64;
            let mut m2 = 0.0f64;
            let mut rung = 0usize;
            for i in 1..=m_max {
                let x: f64 = pois.sample(&mut rng) / cfg.n as f64;
                let d1 = x - mean;
                mean += d1 / i as f64;
                m2 += d1 * (x - mean);
                if rung < rungs && i == cfg.m_ladder[rung] {
                    let var = m2 / (i - 1) as f64;
                    // -inf (degenerate variance) contributes zero likelihood,
                    // mirroring the pseudo-marginal rejection of such draws
                    let ll = if var > 0.0 {
                        -half_ln_2pi - 0.5 * var.ln() - (s - mean).powi(2) / (2.0 * var)
                    } else {
                        f64::NEG_INFINITY
                    };
                    lls[rung].push(ll);
                    rung += 1;
                }
            }
        }
        for (mi, row) in lls.iter().enumerate() {
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let avg = row.iter().map(|l| (l - mx).exp()).sum::<f64>() / k as f64;
            log_avg[mi][gi] = mx + avg.ln() + model.prior_log_density(&theta);
        }
    }

    let mut mean_disc = Vec::with_capacity(rungs);
    let mut sd_disc = Vec::with_capacity(rungs);
    for row in &log_avg {
        let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let dens: Vec<f64> = row.iter().map(|l| (l - mx).exp()).collect();
        let (mean, sd) = grid_moments(&grid, &dens);
        mean_disc.push((mean - reference.mean()).abs());
        sd_disc.push((sd - reference.sd()).abs());
    }
    Ok(SeedResult {
        mean_disc,
        sd_disc,
        control,
    })
}

pub fn run_m_convergence(
    cfg: &MConvergenceConfig,
    settings: &RunSettings,
) -> Result<MConvergenceReport> {
    cfg.validate()?;
    let dir = settings.out_dir.join("m_convergence");
    ensure_dir(&dir)?;
    write_meta(&dir, "m_convergence", settings.seed, cfg)?;
    let root = RngStream::root(settings.seed);

    let results: Vec<SeedResult> = (0..cfg.seeds)
        .into_par_iter()
        .map(|s| run_seed(cfg, spawn_stream(root, 500 + s as u64)))
        .collect::<Result<_>>()?;

    let ladder = &cfg.m_ladder;
    let avg = |pick: fn(&SeedResult) -> &Vec<f64>, mi: usize| {
        results.iter().map(|r| pick(r)[mi]).sum::<f64>() / results.len() as f64
    };
    let rows: Vec<MRow> = ladder
        .iter()
        .enumerate()
        .map(|(mi, &m)| MRow {
            m,
            mean_discrepancy: avg(|r| &r.mean_disc, mi),
            sd_discrepancy: avg(|r| &r.sd_disc, mi),
        })
        .collect();

    let ms: Vec<f64> = ladder.iter().map(|&m| m as f64).collect();
    let mean_ds: Vec<f64> = rows.iter().map(|r| r.mean_discrepancy).collect();
    let sd_ds: Vec<f64> = rows.iter().map(|r| r.sd_discrepancy).collect();
    let report = MConvergenceReport {
        mean_slope: log_log_slope(&ms, &mean_ds),
        sd_slope: log_log_slope(&ms, &sd_ds),
        control_discrepancy: results
            .iter()
            .map(|r| r.control)
            .fold(f64::NEG_INFINITY, f64::max),
        rows,
    };

    write_columns_csv(
        &dir.join("discrepancy.csv"),
        &[
            ("m", &ms),
            ("mean_discrepancy", &mean_ds),
            ("sd_discrepancy", &sd_ds),
        ],
    )?;
    write_json(&dir.join("summary.json"), &report)?;
    Ok(report)
}
