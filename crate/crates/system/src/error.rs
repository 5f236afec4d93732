use hsa_cider::CiderError;
use hsa_grid::GridError;
use hsa_harmonic::HarmonicError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("port mismatch: {0}")]
    PortMismatch(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("harmonic power flow did not converge after {iterations} iterations (residuals {residuals:?})")]
    NonConvergence { iterations: usize, residuals: Vec<f64> },
    #[error("singular nodal matrix")]
    Singular,
    #[error(transparent)]
    Cider(#[from] CiderError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Harmonic(#[from] HarmonicError),
}

pub type Result<T> = std::result::Result<T, SystemError>;
