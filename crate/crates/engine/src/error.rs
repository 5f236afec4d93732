use hsa_harmonic::HarmonicError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("eigensolver failed on a {n}x{n} matrix (norm {norm:e}): {msg}")]
    Solver { n: usize, norm: f64, msg: String },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("eigenpair residual {residual:e} exceeds {bound:e}")]
    Residual { residual: f64, bound: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("sweep aborted at step {step}: {msg}")]
    SweepAborted { step: usize, msg: String },
    #[error(transparent)]
    Harmonic(#[from] HarmonicError),
}

pub type Result<T> = std::result::Result<T, EngineError>;
