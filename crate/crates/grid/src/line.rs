use crate::error::{GridError, Result};
use faer::Mat;
use serde::{Deserialize, Serialize};

/// Sequence parameters of a cable per km.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceParameters {
    pub r_pos: f64,
    pub r_zero: f64,
    pub l_pos: f64,
    pub l_zero: f64,
    pub c_pos: f64,
    pub c_zero: f64,
}

impl SequenceParameters {
    /// Underground cable of the test system (Ω, H, F per km).
    pub fn table_vi() -> Self {
        Self { r_pos: 0.162, r_zero: 0.529, l_pos: 0.262e-3, l_zero: 1.185e-3, c_pos: 637e-9, c_zero: 388e-9 }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            r_pos: self.r_pos * k,
            r_zero: self.r_zero * k,
            l_pos: self.l_pos * k,
            l_zero: self.l_zero * k,
            c_pos: self.c_pos * k,
            c_zero: self.c_zero * k,
        }
    }
}

/// One π-section. `params` are totals for the segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSegment {
    pub length: f64,
    pub params: SequenceParameters,
}

/// Phase-domain matrix of a symmetric element with positive/negative value
/// `pos` and zero-sequence value `zero`.
pub fn sequence_to_phase(pos: f64, zero: f64) -> Mat<f64> {
    let s = (zero + 2.0 * pos) / 3.0;
    let m = (zero - pos) / 3.0;
    Mat::from_fn(3, 3, |i, j| if i == j { s } else { m })
}

/// Inverse of [`sequence_to_phase`]: `(pos, zero)`.
pub fn phase_to_sequence(m: &Mat<f64>) -> (f64, f64) {
    let s = (m[(0, 0)] + m[(1, 1)] + m[(2, 2)]) / 3.0;
    let o = (m[(0, 1)] + m[(0, 2)] + m[(1, 0)] + m[(1, 2)] + m[(2, 0)] + m[(2, 1)]) / 6.0;
    (s - o, s + 2.0 * o)
}

impl LineSegment {
    /// Segment of `length` metres from per-km parameters.
    pub fn from_per_km(per_km: SequenceParameters, length: f64) -> Result<Self> {
        let seg = Self { length, params: per_km.scaled(length / 1000.0) };
        seg.validate()?;
        Ok(seg)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let all = [self.length, p.r_pos, p.r_zero, p.l_pos, p.l_zero, p.c_pos, p.c_zero];
        if all.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(GridError::InvalidParameter("line parameters must be positive".into()));
        }
        Ok(())
    }

    pub fn resistance(&self) -> Mat<f64> {
        sequence_to_phase(self.params.r_pos, self.params.r_zero)
    }

    pub fn inductance(&self) -> Mat<f64> {
        sequence_to_phase(self.params.l_pos, self.params.l_zero)
    }

    /// Half of the shunt capacitance, placed at each end.
    pub fn half_shunt(&self) -> Mat<f64> {
        sequence_to_phase(self.params.c_pos / 2.0, self.params.c_zero / 2.0)
    }
}
