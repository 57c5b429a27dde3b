//! Large-sample normality diagnostic for the toy idealized posterior:
//! skewness, excess kurtosis, and quantile-quantile deviation of
//! standardized draws, plus the n^{-1/2} posterior-sd scaling check.

use crate::error::Result;
use crate::harness::config::{BvmConfig, RunSettings};
use crate::harness::io::{ensure_dir, write_columns_csv, write_json};
use crate::harness::quadrature::toy_grid_posterior;
use crate::harness::write_meta;
use crate::models::toy::ToyModel;
use crate::rng::{spawn_stream, RngStream};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

/// Normality stats for one sample size.
#[derive(Debug, Clone, Serialize)]
pub struct NormalityRow {
    pub n: usize,
    /// Quadrature posterior mean and sd (exact references).
    pub mean: f64,
    pub sd: f64,
    /// Sample-based stats of Q standardized inverse-CDF draws.
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub qq_max_dev: f64,
    /// (mean - theta0) / sd.
    pub mean_z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SdRatio {
    pub n_small: usize,
    pub n_large: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalityReport {
    pub theta0: f64,
    pub rows: Vec<NormalityRow>,
    pub sd_ratio: Option<SdRatio>,
}

fn sample_skew_kurt(draws: &[f64]) -> (f64, f64) {
    let q = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / q;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / q;
    let sd = var.sqrt();
    let m3 = draws.iter().map(|x| ((x - mean) / sd).powi(3)).sum::<f64>() / q;
    let m4 = draws.iter().map(|x| ((x - mean) / sd).powi(4)).sum::<f64>() / q;
    (m3, m4 - 3.0)
}

/// Max |empirical - theoretical| quantile gap over the central 99% of
/// standardized draws.
fn qq_max_deviation(draws: &[f64]) -> f64 {
    let q = draws.len();
    let mean = draws.iter().sum::<f64>() / q as f64;
    let sd = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / q as f64).sqrt();
    let mut std: Vec<f64> = draws.iter().map(|x| (x - mean) / sd).collect();
    std.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut max_dev: f64 = 0.0;
    for (i, &x) in std.iter().enumerate() {
        let p = (i as f64 + 0.5) / q as f64;
        if !(0.005..=0.995).contains(&p) {
            continue;
        }
        max_dev = max_dev.max((x - normal.inverse_cdf(p)).abs());
    }
    max_dev
}

pub fn run_bvm_diagnostic(cfg: &BvmConfig, settings: &RunSettings) -> Result<NormalityReport> {
    cfg.validate()?;
    let dir = settings.out_dir.join("bvm_check");
    ensure_dir(&dir)?;
    write_meta(&dir, "bvm_check", settings.seed, cfg)?;
    let root = RngStream::root(settings.seed);
    let theta0 = 5.0;

    let mut rows = Vec::new();
    for (idx, &n) in cfg.n_ladder.iter().enumerate() {
        let model = ToyModel::new(n);
        let (_, s_obs) = model.generate_data(&mut spawn_stream(root, idx as u64).rng());
        let grid = toy_grid_posterior(&model, &s_obs, cfg.cov_scale, cfg.quad_points)?;
        let mut draw_rng = spawn_stream(root, 100 + idx as u64).rng();
        let draws: Vec<f64> = (0..cfg.q).map(|_| grid.sample(&mut draw_rng)).collect();
        let (skewness, excess_kurtosis) = sample_skew_kurt(&draws);
        let (mean, sd) = (grid.mean(), grid.sd());
        rows.push(NormalityRow {
            n,
            mean,
            sd,
            skewness,
            excess_kurtosis,
            qq_max_dev: qq_max_deviation(&draws),
            mean_z: (mean - theta0) / sd,
        });
    }

    let sd_of = |n: usize| rows.iter().find(|r| r.n == n).map(|r| r.sd);
    let sd_ratio = match (sd_of(cfg.ratio_base), sd_of(4 * cfg.ratio_base)) {
        (Some(small), Some(large)) => Some(SdRatio {
            n_small: cfg.ratio_base,
            n_large: 4 * cfg.ratio_base,
            ratio: large / small,
        }),
        _ => None,
    };

    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let means: Vec<f64> = rows.iter().map(|r| r.mean).collect();
    let sds: Vec<f64> = rows.iter().map(|r| r.sd).collect();
    let skews: Vec<f64> = rows.iter().map(|r| r.skewness).collect();
    let kurts: Vec<f64> = rows.iter().map(|r| r.excess_kurtosis).collect();
    let qqs: Vec<f64> = rows.iter().map(|r| r.qq_max_dev).collect();
    write_columns_csv(
        &dir.join("normality.csv"),
        &[
            ("n", &ns),
            ("mean", &means),
            ("sd", &sds),
            ("skewness", &skews),
            ("excess_kurtosis", &kurts),
            ("qq_max_dev", &qqs),
        ],
    )?;

    let report = NormalityReport {
        theta0,
        rows,
        sd_ratio,
    };
    write_json(&dir.join("summary.json"), &report)?;
    Ok(report)
}
