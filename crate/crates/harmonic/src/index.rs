use crate::error::{HarmonicError, Result};
use crate::signal::Domain;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Harmonic orders `-h_max..=h_max` of a signal with fundamental `f1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicIndexSet {
    pub h_max: usize,
    pub f1: f64,
}

impl HarmonicIndexSet {
    pub fn new(h_max: usize, f1: f64) -> Result<Self> {
        if !(f1 > 0.0) || !f1.is_finite() {
            return Err(HarmonicError::InvalidIndexSet(format!("f1 must be positive, got {f1}")));
        }
        Ok(Self { h_max, f1 })
    }

    pub fn len(&self) -> usize {
        2 * self.h_max + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn orders(&self) -> impl Iterator<Item = i32> + Clone {
        let h = self.h_max as i32;
        -h..=h
    }

    pub fn contains(&self, h: i32) -> bool {
        h.unsigned_abs() as usize <= self.h_max
    }

    /// Position of order `h` within the stored order sequence.
    pub fn position(&self, h: i32) -> Option<usize> {
        self.contains(h).then(|| (h + self.h_max as i32) as usize)
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.f1
    }

    pub fn period(&self) -> f64 {
        1.0 / self.f1
    }

    pub fn with_h_max(&self, h_max: usize) -> Self {
        Self { h_max, f1: self.f1 }
    }

    pub fn check_same(&self, other: &Self) -> Result<()> {
        if self.h_max != other.h_max || self.f1 != other.f1 {
            return Err(HarmonicError::IndexSetMismatch(format!(
                "(h_max={}, f1={}) vs (h_max={}, f1={})",
                self.h_max, self.f1, other.h_max, other.f1
            )));
        }
        Ok(())
    }
}

/// Truncation limits of the two coordinate domains.
///
/// Hardware (ABC) signals keep orders up to `h_abc`, control software (DQ)
/// signals up to `h_dqz`. The default keeps one more order on the DQ side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicLimits {
    pub f1: f64,
    pub h_abc: usize,
    pub h_dqz: usize,
}

impl HarmonicLimits {
    pub fn new(f1: f64, h_abc: usize) -> Result<Self> {
        Self::with_dqz(f1, h_abc, h_abc + 1)
    }

    pub fn with_dqz(f1: f64, h_abc: usize, h_dqz: usize) -> Result<Self> {
        HarmonicIndexSet::new(h_abc, f1)?;
        Ok(Self { f1, h_abc, h_dqz })
    }

    /// Limits of a time-invariant (averaged) model: no harmonic orders at all.
    pub fn averaged(f1: f64) -> Self {
        Self { f1, h_abc: 0, h_dqz: 0 }
    }

    pub fn range(&self, domain: Domain) -> usize {
        match domain {
            Domain::Hardware => self.h_abc,
            Domain::Software => self.h_dqz,
        }
    }

    pub fn abc(&self) -> HarmonicIndexSet {
        HarmonicIndexSet { h_max: self.h_abc, f1: self.f1 }
    }

    pub fn dqz(&self) -> HarmonicIndexSet {
        HarmonicIndexSet { h_max: self.h_dqz, f1: self.f1 }
    }

    pub fn index_set(&self, domain: Domain) -> HarmonicIndexSet {
        HarmonicIndexSet { h_max: self.range(domain), f1: self.f1 }
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.f1
    }
}
