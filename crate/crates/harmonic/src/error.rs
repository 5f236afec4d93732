use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarmonicError {
    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),
    #[error("index-set mismatch: {0}")]
    IndexSetMismatch(String),
    #[error("harmonic order {order} outside ±{h_max}")]
    OrderOutOfRange { order: i32, h_max: usize },
    #[error("ambiguous DQ pair: phase of q/d is {phase:.4} rad")]
    AmbiguousPair { phase: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("singular interconnection: {0}")]
    Singular(String),
    #[error("unknown port `{0}`")]
    UnknownPort(String),
}

pub type Result<T> = std::result::Result<T, HarmonicError>;
