use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the evaluation, estimation and geometry routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution specification: {0}")]
    InvalidSpec(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The joint cdf of the variant is not implemented; Monte Carlo evaluation must be used.
    #[error("cdf-unavailable: joint cdf of {0} is not available, use Monte Carlo evaluation")]
    CdfUnavailable(String),

    #[error("closed form unavailable for {0}")]
    ClosedFormUnavailable(String),

    #[error("integration-failure: estimate {estimate} with error bound {error_bound}")]
    IntegrationFailure { estimate: f64, error_bound: f64 },

    /// Segment contributions of the truncated tail integral stopped decreasing.
    #[error("tail-not-integrable-numerically: partial estimate {estimate} up to t = {upper}")]
    TailNotIntegrable { estimate: f64, upper: f64 },

    #[error("not-convex: difference quotients {quotients:?} increase as the step shrinks")]
    NotConvex { quotients: Vec<f64> },

    #[error("widen-window: remainder below {tolerance} on the whole fit window starting at {x_lo}")]
    WidenWindow { x_lo: f64, tolerance: f64 },

    #[error("bridge-representation-unavailable: {0}")]
    BridgeRepresentationUnavailable(String),

    #[error("product-unavailable: {0}")]
    ProductUnavailable(String),

    #[error("seed required: {0}")]
    SeedRequired(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to invalid input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::IntegrationFailure { .. }
                | Error::TailNotIntegrable { .. }
                | Error::NotConvex { .. }
                | Error::WidenWindow { .. }
                | Error::BridgeRepresentationUnavailable(_)
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSpec(_) => "invalid-spec",
            Error::Domain(_) => "domain",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::CdfUnavailable(_) => "cdf-unavailable",
            Error::ClosedFormUnavailable(_) => "closed-form-unavailable",
            Error::IntegrationFailure { .. } => "integration-failure",
            Error::TailNotIntegrable { .. } => "tail-not-integrable-numerically",
            Error::NotConvex { .. } => "not-convex",
            Error::WidenWindow { .. } => "widen-window",
            Error::BridgeRepresentationUnavailable(_) => "bridge-representation-unavailable",
            Error::ProductUnavailable(_) => "product-unavailable",
            Error::SeedRequired(_) => "seed-required",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    /// Best partial estimate carried by numerical failures.
    pub fn partial_estimate(&self) -> Option<f64> {
        match self {
            Error::IntegrationFailure { estimate, .. } | Error::TailNotIntegrable { estimate, .. } => {
                Some(*estimate)
            }
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
