use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("enumeration of {required} cases exceeds the cap of {cap}")]
    EnumerationCap { required: f64, cap: u64 },

    #[error("partition error: {0}")]
    Partition(String),

    #[error("black-box interface violation: {0}")]
    InterfaceViolation(String),

    #[error("invalid round request: {0}")]
    InvalidRequest(String),

    #[error("bound not applicable: {0}")]
    Inapplicable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
