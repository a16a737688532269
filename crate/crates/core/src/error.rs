use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// A resonance denominator `|E±V - e_i|` fell below the degeneracy guard.
    #[error("degenerate denominator: |E±V - e_{index}| = {gap:e} below guard {guard:e}")]
    DegenerateDenominator { index: usize, gap: f64, guard: f64 },

    #[error("zero doublet splitting: transfer time is infinite")]
    ZeroSplitting,

    #[error("value {value} outside admissible range {range}")]
    OutOfRange { value: f64, range: &'static str },

    #[error("singular least-squares system: {0}")]
    SingularFit(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("malformed record file {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
