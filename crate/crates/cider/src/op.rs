use crate::error::{CiderError, Result};
use crate::reference::{xi_spectrum, xi_sup_norm};
use hsa_harmonic::{HarmonicIndexSet, HarmonicSpectrum, C64};
use serde::{Deserialize, Serialize};

/// Default ceiling on `sup_t |ξ_D(t)|` for the small-distortion hypothesis.
pub const DEFAULT_XI_CEILING: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpSource {
    Tds,
    Hpf,
    FundamentalOnly,
}

/// Internal periodic steady state of a DC-side resource, needed to
/// linearise the DC-link power balance.
#[derive(Debug, Clone, PartialEq)]
pub struct DcOperatingPoint {
    /// Actuator voltage, ABC (3 channels).
    pub u_abc: HarmonicSpectrum,
    /// Actuator-side inductor current, ABC (3 channels).
    pub i_alpha_abc: HarmonicSpectrum,
    /// DC-link voltage (1 channel).
    pub v_delta: HarmonicSpectrum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    /// Grid voltage at the point of connection in DQ (2 channels).
    pub v_gamma_dq: HarmonicSpectrum,
    pub source: OpSource,
    pub dc: Option<DcOperatingPoint>,
}

impl OperatingPoint {
    /// Balanced sinusoidal grid voltage of peak `v_peak`: constant D, zero Q.
    pub fn fundamental(idx: HarmonicIndexSet, v_peak: f64) -> Self {
        let mut v = HarmonicSpectrum::zeros(idx, 2);
        v.set(0, 0, C64::new(v_peak, 0.0));
        Self { v_gamma_dq: v, source: OpSource::FundamentalOnly, dc: None }
    }

    pub fn v_d(&self) -> HarmonicSpectrum {
        self.v_gamma_dq.select(0)
    }

    /// Checks `V_D,0 ≠ 0` and `sup |ξ_D| < ceiling`; returns the sup norm.
    pub fn validate(&self, ceiling: f64) -> Result<f64> {
        if self.v_gamma_dq.channel_count() != 2 {
            return Err(CiderError::SingularOperatingPoint("grid voltage must be a DQ pair".into()));
        }
        let xi = xi_spectrum(&self.v_d())?;
        let sup = xi_sup_norm(&xi);
        if sup >= ceiling {
            return Err(CiderError::HypothesisViolation { sup, ceiling });
        }
        Ok(sup)
    }

    /// Keeps only orders up to `h_abc` on ABC spectra and `h_abc + 1` on DQ ones.
    pub fn truncated(&self, h_abc: usize) -> Self {
        let cut = |s: &HarmonicSpectrum, h: usize| {
            let keep = s.index_set().with_h_max(h.min(s.index_set().h_max));
            s.reindexed(keep).reindexed(s.index_set())
        };
        Self {
            v_gamma_dq: cut(&self.v_gamma_dq, h_abc + 1),
            source: self.source,
            dc: self.dc.as_ref().map(|d| DcOperatingPoint {
                u_abc: cut(&d.u_abc, h_abc),
                i_alpha_abc: cut(&d.i_alpha_abc, h_abc),
                v_delta: cut(&d.v_delta, h_abc),
            }),
        }
    }

    /// Drops every order except the fundamental (ABC) and DC (DQ, DC link).
    pub fn fundamental_only(&self) -> Self {
        let mut out = self.truncated(1);
        out.source = OpSource::FundamentalOnly;
        out.v_gamma_dq = keep_orders(&self.v_gamma_dq, 0);
        if let Some(d) = out.dc.as_mut() {
            d.v_delta = keep_orders(&d.v_delta, 0);
        }
        out
    }
}

fn keep_orders(s: &HarmonicSpectrum, h: usize) -> HarmonicSpectrum {
    s.reindexed(s.index_set().with_h_max(h)).reindexed(s.index_set())
}
