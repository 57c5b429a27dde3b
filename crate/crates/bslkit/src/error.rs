use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Error, Debug)]
pub enum Error {
    #[error("matrix is not symmetric (max asymmetry {max_asym:e})")]
    NotSymmetric { max_asym: f64 },

    #[error("matrix is not positive semi-definite (min eigenvalue {min_eig:e})")]
    NotPositiveSemiDefinite { min_eig: f64 },

    #[error("singular posterior covariance (min eigenvalue {min_eig:e})")]
    SingularPosteriorCovariance { min_eig: f64 },

    #[error("degenerate summary coordinate {index}: zero sample variance")]
    DegenerateSummaryCoordinate { index: usize },

    #[error("degenerate summary: {0}")]
    DegenerateSummary(String),

    #[error("parameter outside prior support")]
    OutOfSupport,

    #[error("model does not expose analytic mean/covariance")]
    NoAnalyticForm,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("chain initialization failed: {attempts} likelihood estimates were -inf")]
    ChainInit { attempts: usize },

    #[error("proposal mismatch: all {n} importance weights are zero")]
    ProposalMismatch { n: usize },

    #[error("rejection bound violated: max observed log density {max_observed} > bound {bound}")]
    BoundViolated { max_observed: f64, bound: f64 },

    #[error("log-likelihood diagnostic hit {failures} -inf evaluations out of {total}")]
    DiagnosticFailures { failures: usize, total: usize },

    #[error("Gaussian process fit failed: {0}")]
    GpFit(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("config error at {key}: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
