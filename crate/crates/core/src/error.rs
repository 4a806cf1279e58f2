use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient data for {what}: need at least {needed}, got {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("optimizer did not converge after {iterations} iterations (best objective {best_value:.6e}, gradient norm {grad_norm:.3e})")]
    Optimization {
        iterations: usize,
        best_value: f64,
        grad_norm: f64,
        best_params: Vec<f64>,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("cache was produced by an older parameter version ({cache}) than the model ({model})")]
    StaleCache { cache: u64, model: u64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("missing annotations: {0}")]
    MissingAnnotations(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported document: {0}")]
    Document(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Stable machine-readable tag, used by the CLI's JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InsufficientData { .. } => "insufficient_data",
            Error::OutOfRange(_) => "out_of_range",
            Error::Degenerate(_) => "degenerate",
            Error::Optimization { .. } => "optimization",
            Error::Parse { .. } => "parse",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::StaleCache { .. } => "stale_cache",
            Error::NonFinite(_) => "non_finite",
            Error::MissingAnnotations(_) => "missing_annotations",
            Error::InvalidInput(_) => "invalid_input",
            Error::Document(_) => "document",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Config(_) => "config",
        }
    }
}
