use thiserror::Error;

use crate::labels::Scan;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("label index must be positive")]
    ZeroIndex,
    #[error("spawn time {time} does not follow parent time {parent}")]
    NonIncreasingTime { parent: Scan, time: Scan },
    #[error("label path is empty")]
    Empty,
    #[error("cannot parse label `{0}`")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaussianError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("innovation covariance is not positive definite")]
    SingularInnovation,
    #[error("family block needs at least one member")]
    EmptyFamily,
    #[error("member index {index} out of range for {len} members")]
    MemberOutOfRange { index: usize, len: usize },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{0}")]
    Parse(String),
}

impl ConfigError {
    pub(crate) fn invalid(path: &str, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            path: path.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("prior density has no components")]
    EmptyPrior,
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance too large for enumeration: {rows} rows, {measurements} measurements")]
    TooLarge { rows: usize, measurements: usize },
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
