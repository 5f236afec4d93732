use crate::error::{Result, TdsError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TdsConfig {
    /// Integration step, s. Must divide the fundamental period.
    pub step: f64,
    /// Simulated time, s.
    pub duration: f64,
    /// Signals to record: node names (`N04`), `e` (source EMF), `i_te`, or `<resource>.<quantity>`
    /// with quantity one of `i_alpha`, `v_phi`, `i_gamma`, `u`, `v_delta`, `v_port`, `p`.
    pub record: Vec<String>,
    /// Number of fundamental periods in the DFT window.
    pub fft_window: usize,
    /// Highest harmonic order of interest.
    pub h_max: usize,
    /// Keep one sample every `decimation` steps.
    pub decimation: usize,
}

impl Default for TdsConfig {
    fn default() -> Self {
        Self { step: 5e-7, duration: 0.5, record: Vec::new(), fft_window: 5, h_max: 25, decimation: 20 }
    }
}

impl TdsConfig {
    /// Integration steps per fundamental period.
    pub fn steps_per_period(&self, f1: f64) -> Result<usize> {
        let n = 1.0 / (f1 * self.step);
        let r = n.round();
        if r < 1.0 || (n - r).abs() > 1e-6 * r {
            return Err(TdsError::InvalidConfig(format!("step {} s does not divide the period 1/{f1} s", self.step)));
        }
        Ok(r as usize)
    }

    pub fn samples_per_period(&self, f1: f64) -> Result<usize> {
        Ok(self.steps_per_period(f1)? / self.decimation)
    }

    pub fn validate(&self, f1: f64) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) || !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(TdsError::InvalidConfig("step and duration must be positive".into()));
        }
        if self.h_max == 0 || self.decimation == 0 {
            return Err(TdsError::InvalidConfig("h_max and decimation must be positive".into()));
        }
        let bound = 1.0 / (20.0 * f1 * self.h_max as f64);
        if self.step > bound {
            return Err(TdsError::StepSize { step: self.step, bound });
        }
        if self.fft_window < 5 {
            return Err(TdsError::InvalidConfig(format!("fft_window {} < 5 periods", self.fft_window)));
        }
        let spp = self.steps_per_period(f1)?;
        if spp % self.decimation != 0 {
            return Err(TdsError::InvalidConfig("decimation must divide the steps per period".into()));
        }
        if spp / self.decimation < 2 * self.h_max + 1 {
            return Err(TdsError::InvalidConfig("too few recorded samples per period for h_max".into()));
        }
        Ok(())
    }
}

/// Parameter steps applied at given times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainSchedule {
    pub resource: String,
    /// Parameter path inside the resource, e.g. `alpha.k_fb`.
    pub parameter: String,
    /// `(time, value)`, strictly increasing in time.
    pub steps: Vec<(f64, f64)>,
}

impl GainSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.steps.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(TdsError::InvalidConfig("schedule times must be strictly increasing".into()));
        }
        if self.steps.iter().any(|s| !s.0.is_finite() || !s.1.is_finite() || s.0 < 0.0) {
            return Err(TdsError::InvalidConfig("schedule entries must be finite".into()));
        }
        Ok(())
    }
}

/// Dwell control of a staircase: each value is held until the recorded
/// signals settle, within `[min_dwell, max_dwell]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettleCriterion {
    /// Relative change of the per-period RMS between consecutive periods.
    pub rms_tol: f64,
    pub min_dwell: f64,
    pub max_dwell: f64,
    /// Divergence threshold as a multiple of the settled envelope.
    pub envelope_factor: f64,
}

impl Default for SettleCriterion {
    fn default() -> Self {
        Self { rms_tol: 1e-5, min_dwell: 0.1, max_dwell: 1.0, envelope_factor: 10.0 }
    }
}

impl SettleCriterion {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rms_tol > 0.0
            && self.min_dwell >= 0.0
            && self.max_dwell >= self.min_dwell
            && self.max_dwell.is_finite()
            && self.envelope_factor > 1.0;
        if !ok {
            return Err(TdsError::InvalidConfig("settle criterion out of range".into()));
        }
        Ok(())
    }
}
