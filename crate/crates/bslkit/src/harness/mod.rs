//! Experiment drivers and file output.
//!
//! Every experiment is a pure function of (config, seed): reruns with the
//! same inputs produce byte-identical CSV/JSON outputs under
//! `<outdir>/<experiment>/`.

pub mod acceptance_rate;
pub mod adhoc;
pub mod bvm;
pub mod config;
pub mod intervals;
pub mod io;
pub mod kde;
pub mod m_convergence;
pub mod ma2_coverage;
pub mod pilot;
pub mod quadrature;
pub mod toad_study;
pub mod toy_figure1;

pub use acceptance_rate::{run_acceptance_experiment, AcceptanceReport, RatePoint};
pub use adhoc::{run_diagnose_sigma2, run_sample, SampleSummary, Sigma2Report};
pub use bvm::{run_bvm_diagnostic, NormalityReport, NormalityRow};
pub use config::{
    AcceptanceRateConfig, BvmConfig, DiagnoseSigma2Config, MConvergenceConfig, Ma2CoverageConfig,
    ModelChoice, Preset, RunSettings, SampleConfig, ToadConfig, ToyFigure1Config,
};
pub use intervals::{credible_interval, weighted_quantile, CredibleInterval};
pub use m_convergence::{run_m_convergence, MConvergenceReport, MRow};
pub use ma2_coverage::{run_ma2_coverage, CoverageRow, CoverageTable};
pub use quadrature::{toy_grid_posterior, GridPosterior};
pub use toad_study::{run_toad_study, ToadSummary};
pub use toy_figure1::{run_toy_figure1, ToyFigure1Summary};

use crate::error::Result;
use serde::Serialize;
use std::path::Path;

#[derive(Serialize)]
struct Meta<'a, C: Serialize> {
    experiment: &'a str,
    seed: u64,
    version: &'a str,
    config: &'a C,
}

/// Write `meta.json`: the experiment id, seed, crate version, and the fully
/// resolved config.
pub fn write_meta<C: Serialize>(dir: &Path, experiment: &str, seed: u64, config: &C) -> Result<()> {
    io::write_json(
        &dir.join("meta.json"),
        &Meta {
            experiment,
            seed,
            version: env!("CARGO_PKG_VERSION"),
            config,
        },
    )
}
