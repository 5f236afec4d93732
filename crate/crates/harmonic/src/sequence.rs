use crate::error::{HarmonicError, Result};
use crate::index::HarmonicLimits;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

/// Default phase tolerance when classifying a DQ pair (5 degrees).
pub const DEFAULT_PAIR_TOLERANCE: f64 = PI / 36.0;

/// Symmetric-component sequence of an ABC triplet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AbcSequence {
    Positive,
    Negative,
    Homopolar,
}

/// Equivalent sequence of a DQ(Z) quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DqSequence {
    PositivePrime,
    NegativePrime,
    Homopolar,
}

impl fmt::Display for AbcSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AbcSequence::Positive => "P",
            AbcSequence::Negative => "N",
            AbcSequence::Homopolar => "H",
        })
    }
}

impl fmt::Display for DqSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DqSequence::PositivePrime => "P'",
            DqSequence::NegativePrime => "N'",
            DqSequence::Homopolar => "H",
        })
    }
}

/// Harmonic order seen in DQZ coordinates for an ABC component of order `h`.
/// Returns `None` when the image lies beyond the DQZ truncation limit.
pub fn sequence_map_abc_to_dqz(h: i32, seq: AbcSequence, limits: &HarmonicLimits) -> Result<Option<i32>> {
    if h.unsigned_abs() as usize > limits.h_abc {
        return Err(HarmonicError::OrderOutOfRange { order: h, h_max: limits.h_abc });
    }
    let image = match seq {
        AbcSequence::Positive => h - 1,
        AbcSequence::Negative => h + 1,
        AbcSequence::Homopolar => h,
    };
    Ok((image.unsigned_abs() as usize <= limits.h_dqz).then_some(image))
}

/// Harmonic order seen in ABC coordinates for a DQZ component of order `h`.
/// Returns `None` when the image is cut off by the ABC truncation limit.
pub fn sequence_map_dqz_to_abc(h: i32, seq: DqSequence, limits: &HarmonicLimits) -> Result<Option<i32>> {
    if h.unsigned_abs() as usize > limits.h_dqz {
        return Err(HarmonicError::OrderOutOfRange { order: h, h_max: limits.h_dqz });
    }
    let image = match seq {
        DqSequence::PositivePrime => h + 1,
        DqSequence::NegativePrime => h - 1,
        DqSequence::Homopolar => h,
    };
    Ok((image.unsigned_abs() as usize <= limits.h_abc).then_some(image))
}

/// P' when q lags d by 90 degrees, N' when it leads.
pub fn classify_dq_pair(d: C64, q: C64, tol: f64) -> Result<DqSequence> {
    if d.norm() == 0.0 && q.norm() == 0.0 {
        return Err(HarmonicError::Dimension("both DQ components are zero".into()));
    }
    // One component exactly zero: the relative phase is undefined.
    if d.norm() == 0.0 || q.norm() == 0.0 {
        return Err(HarmonicError::AmbiguousPair { phase: f64::NAN });
    }
    let phase = (q * d.conj()).arg();
    if (phase + FRAC_PI_2).abs() <= tol {
        Ok(DqSequence::PositivePrime)
    } else if (phase - FRAC_PI_2).abs() <= tol {
        Ok(DqSequence::NegativePrime)
    } else {
        Err(HarmonicError::AmbiguousPair { phase })
    }
}

/// Symmetric components `(zero, positive, negative)` of an ABC triplet.
pub fn symmetric_components(abc: [C64; 3]) -> (C64, C64, C64) {
    let a = C64::from_polar(1.0, 2.0 * PI / 3.0);
    let a2 = a * a;
    let zero = (abc[0] + abc[1] + abc[2]) / 3.0;
    let pos = (abc[0] + a * abc[1] + a2 * abc[2]) / 3.0;
    let neg = (abc[0] + a2 * abc[1] + a * abc[2]) / 3.0;
    (zero, pos, neg)
}
