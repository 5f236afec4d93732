use hsa_harmonic::HarmonicError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CiderError {
    #[error("invalid resource spec: {0}")]
    InvalidSpec(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("singular operating point: {0}")]
    SingularOperatingPoint(String),
    #[error("operating point violates the small-distortion hypothesis: sup|ξ| = {sup:.4} ≥ {ceiling}")]
    HypothesisViolation { sup: f64, ceiling: f64 },
    #[error("{0}")]
    KindMismatch(String),
    #[error("missing operating point: {0}")]
    MissingOperatingPoint(String),
    #[error(transparent)]
    Harmonic(#[from] HarmonicError),
}

pub type Result<T> = std::result::Result<T, CiderError>;
