//! System assembly: closed-loop harmonic state-space model of a network
//! with converter resources, its LTI counterpart in the rotating frame,
//! and the harmonic power flow that provides the operating point.

pub mod assemble;
pub mod description;
pub mod error;
pub mod hpf;
pub mod lti;

pub use assemble::{close_loop, closed_loop_ltp, open_system_ltp, OperatingPoints};
pub use description::{CiderAttachment, SystemDescription};
pub use error::{Result, SystemError};
pub use hpf::{
    dq_spectrum, harmonic_power_flow, reference_spectrum, ConvergenceReport, HpfMode, HpfOptions, SystemOperatingPoint,
};
pub use lti::lti_counterpart;
