//! Harmonic-domain primitives.
//!
//! Spectra of periodic signals, their Toeplitz lifts, the frequency-shift
//! operator, ABC/DQZ harmonic-order maps, and a small interconnection layer
//! for linear time-periodic state-space models that can be realized either
//! pointwise in time or lifted into the harmonic domain.

pub mod error;
pub mod hss;
pub mod index;
pub mod ltp;
pub mod periodic;
pub mod sequence;
pub mod shift;
pub mod signal;
pub mod spectrum;
pub mod toeplitz;

pub use error::{HarmonicError, Result};
pub use hss::{lifted_labels, HssModel, LiftedLabel, Provenance};
pub use index::{HarmonicIndexSet, HarmonicLimits};
pub use ltp::{Composite, Context, Endpoint, LtpModel, Realization};
pub use num_complex::Complex64 as C64;
pub use periodic::{CustomGain, Gain, PeriodicMatrix};
pub use sequence::{
    classify_dq_pair, sequence_map_abc_to_dqz, sequence_map_dqz_to_abc, symmetric_components, AbcSequence,
    DqSequence, DEFAULT_PAIR_TOLERANCE,
};
pub use shift::{shift_operator, FrequencyShiftOperator};
pub use signal::{Coord, Domain, Signal};
pub use spectrum::HarmonicSpectrum;
pub use toeplitz::{toeplitz_from_spectrum, ToeplitzOperator};

pub use faer;
