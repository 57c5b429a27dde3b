//! Bayesian synthetic likelihood with estimated or misspecified covariances,
//! pseudo-marginal samplers, and sandwich-type posterior adjustments.
//!
//! The crate is organised as:
//! - [`model`]: the simulator-model interface shared by everything else;
//! - [`synlik`]: synthetic likelihood estimation (full / shrinkage / diagonal
//!   / analytic covariance) and diagnostics;
//! - [`samplers`]: pseudo-marginal random-walk Metropolis-Hastings,
//!   importance sampling and rejection sampling;
//! - [`adjust`]: sandwich-type adjustment of posterior samples driven by a
//!   Gaussian-process emulator of the log-likelihood surface;
//! - [`models`]: the toy Poisson/negative-binomial, MA(2) and toad simulators;
//! - [`harness`]: experiment drivers and file output.

pub mod adjust;
pub mod error;
pub mod gp;
pub mod harness;
pub mod lhs;
pub mod linalg;
pub mod model;
pub mod models;
pub mod rng;
pub mod samplers;
pub mod synlik;

pub use error::{Error, Result};
pub use model::{ParamVector, SimulatorModel, SummaryVector};
pub use rng::{spawn_stream, RngStream};

/// Cap the global worker pool; call once, before any parallel work. Results
/// never depend on the pool size, only throughput does.
pub fn configure_threads(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Precondition(format!("thread pool: {e}")))
}
