//! Converter-interfaced resource models.
//!
//! Declarative specs for grid-forming and grid-following resources, their
//! time-periodic state-space models (hardware in ABC, control software in
//! DQ), the harmonic-domain lift, the small-signal model of the PQ reference
//! calculation, and the nonlinear dynamics used for time-domain simulation.

pub mod blocks;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod op;
pub mod reference;
pub mod spec;

pub use blocks::{hardware_block, port_input_group, port_output_group, software_block, LinearBlock, INNERMOST_STATE};
pub use dynamics::CiderDynamics;
pub use error::{CiderError, Result};
pub use model::{build_ltp_model, lift_to_hss, state_counts};
pub use op::{DcOperatingPoint, OpSource, OperatingPoint, DEFAULT_XI_CEILING};
pub use reference::{
    reciprocal_taylor, reciprocal_taylor_with_ceiling, reference_law, reference_small_signal,
    reference_small_signal_with_ceiling, xi_spectrum, xi_sup_norm, ReferenceGain, ReferenceSmallSignal,
};
pub use spec::{
    CiderKind, CiderSpec, ControllerStage, FilterKind, FilterStage, ParamField, ParamPath, Setpoint, Stage, StageLabel,
};

/// Default Taylor order of the reciprocal expansion.
pub const DEFAULT_TAYLOR_ORDER: usize = 2;
/// Largest supported Taylor order.
pub const MAX_TAYLOR_ORDER: usize = 6;
