//! Nonlinear time-domain simulation of a network with converter resources:
//! fixed-step RK4, steady-state spectra, gain staircases.

pub mod config;
pub mod error;
pub mod model;
pub mod simulate;
pub mod spectrum;
pub mod staircase;

pub use config::{GainSchedule, SettleCriterion, TdsConfig};
pub use error::{Result, TdsError};
pub use model::{Aux, SystemDynamics};
pub use simulate::{simulate, Event, SimulationResult, Simulator, TimeSeries};
pub use spectrum::{column_spectrum, group_spectrum, steady_state_spectrum, window_rms_change};
pub use staircase::{resource_operating_point, run_until_settled, staircase_experiment, with_source_harmonics, StaircaseResult};
