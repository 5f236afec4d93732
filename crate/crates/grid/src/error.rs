use hsa_harmonic::HarmonicError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("network is disconnected: node {0} is unreachable from the source")]
    Disconnected(String),
    #[error(transparent)]
    Harmonic(#[from] HarmonicError),
}

pub type Result<T> = std::result::Result<T, GridError>;
