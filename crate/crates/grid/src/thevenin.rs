use crate::error::{GridError, Result};
use hsa_harmonic::{HarmonicIndexSet, HarmonicSpectrum, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

/// One harmonic of the source EMF, relative to the fundamental.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicInjection {
    pub order: u32,
    /// Magnitude as a fraction of the fundamental.
    pub magnitude: f64,
    /// Phase in rad.
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheveninEquivalent {
    /// Nominal phase voltage, V RMS.
    pub v_n: f64,
    /// Short-circuit power, W.
    pub s_sc: f64,
    pub r_over_x: f64,
    /// Fundamental frequency, Hz.
    pub f1: f64,
    #[serde(default)]
    pub harmonic_injection: Vec<HarmonicInjection>,
}

/// Short-circuit resistance and reactance: `|Z| = V_n² / S_sc` split by the
/// R/X ratio.
pub fn thevenin_from_sc(v_n: f64, s_sc: f64, r_over_x: f64) -> Result<(f64, f64)> {
    if !(v_n > 0.0 && s_sc > 0.0 && r_over_x > 0.0) {
        return Err(GridError::InvalidParameter("V_n, S_sc and R/X must be positive".into()));
    }
    let z = v_n * v_n / s_sc;
    let x = z / (1.0 + r_over_x * r_over_x).sqrt();
    Ok((r_over_x * x, x))
}

/// Harmonic voltage levels of the source EMF.
pub fn table_v_harmonics() -> Vec<HarmonicInjection> {
    [(5, 0.06, PI / 8.0), (7, 0.05, PI / 12.0), (11, 0.035, PI / 16.0), (13, 0.03, PI / 8.0), (17, 0.02, PI / 12.0), (19, 0.015, PI / 16.0), (23, 0.015, PI / 16.0)]
        .into_iter()
        .map(|(order, magnitude, phase)| HarmonicInjection { order, magnitude, phase })
        .collect()
}

impl TheveninEquivalent {
    /// Source used with a single resource (weak grid).
    pub fn resource_analysis() -> Self {
        Self { v_n: 230.0, s_sc: 267e3, r_over_x: 6.207, f1: 50.0, harmonic_injection: table_v_harmonics() }
    }

    /// Substation of the multi-node test system.
    pub fn system_analysis() -> Self {
        Self { v_n: 230.0, s_sc: 3.85e6, r_over_x: 0.271, f1: 50.0, harmonic_injection: table_v_harmonics() }
    }

    pub fn without_harmonics(&self) -> Self {
        Self { harmonic_injection: Vec::new(), ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        thevenin_from_sc(self.v_n, self.s_sc, self.r_over_x)?;
        if !(self.f1 > 0.0) {
            return Err(GridError::InvalidParameter("f1 must be positive".into()));
        }
        for h in &self.harmonic_injection {
            if h.order < 2 || !(h.magnitude >= 0.0) {
                return Err(GridError::InvalidParameter(format!("bad harmonic injection {h:?}")));
            }
        }
        Ok(())
    }

    pub fn z_sc(&self) -> f64 {
        self.v_n * self.v_n / self.s_sc
    }

    /// `(R, L)` of the source branch.
    pub fn r_l(&self) -> Result<(f64, f64)> {
        let (r, x) = thevenin_from_sc(self.v_n, self.s_sc, self.r_over_x)?;
        Ok((r, x / (2.0 * PI * self.f1)))
    }

    /// Peak of the fundamental phase voltage.
    pub fn v_peak(&self) -> f64 {
        SQRT_2 * self.v_n
    }

    /// Phase EMF at `θ = ω₁t`. Harmonic `h` of phase `x` is
    /// `cos(h(θ − φ_x) + ψ_h)`, so the sequence follows from the order.
    pub fn emf(&self, theta: f64) -> [f64; 3] {
        let ph = [0.0, 2.0 * PI / 3.0, -2.0 * PI / 3.0];
        let vp = self.v_peak();
        let mut out = [0.0; 3];
        for x in 0..3 {
            let mut v = (theta - ph[x]).cos();
            for h in &self.harmonic_injection {
                let k = h.order as f64;
                v += h.magnitude * (k * (theta - ph[x]) + h.phase).cos();
            }
            out[x] = vp * v;
        }
        out
    }

    /// EMF spectrum (3 channels, ABC). Orders beyond the index set are dropped.
    pub fn emf_spectrum(&self, idx: HarmonicIndexSet) -> HarmonicSpectrum {
        let ph = [0.0, 2.0 * PI / 3.0, -2.0 * PI / 3.0];
        let vp = self.v_peak();
        let mut s = HarmonicSpectrum::zeros(idx, 3);
        let mut put = |h: i32, mag: f64, psi: f64| {
            if idx.contains(h) {
                for x in 0..3 {
                    let c = C64::from_polar(vp * mag / 2.0, psi - h as f64 * ph[x]);
                    s.set(x, h, s.get(x, h) + c);
                    s.set(x, -h, s.get(x, -h) + c.conj());
                }
            }
        };
        put(1, 1.0, 0.0);
        for h in &self.harmonic_injection {
            put(h.order as i32, h.magnitude, h.phase);
        }
        s
    }
}
