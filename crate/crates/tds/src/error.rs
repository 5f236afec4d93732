use thiserror::Error;

#[derive(Debug, Error)]
pub enum TdsError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("step {step:e} s exceeds the bound {bound:e} s")]
    StepSize { step: f64, bound: f64 },
    #[error("non-finite value in state {state} at t = {time} s")]
    NonFinite { time: f64, state: String },
    #[error("steady state not reached: relative RMS change {residual:e}")]
    Unsettled { residual: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Cider(#[from] hsa_cider::CiderError),
    #[error(transparent)]
    Grid(#[from] hsa_grid::GridError),
    #[error(transparent)]
    System(#[from] hsa_system::SystemError),
    #[error(transparent)]
    Harmonic(#[from] hsa_harmonic::HarmonicError),
}

pub type Result<T> = std::result::Result<T, TdsError>;
