//! Small-signal model of the PQ reference calculation
//! `i*_DQ(t) = w_σ / v_D(t)`.

use crate::error::{CiderError, Result};
use crate::op::OperatingPoint;
use crate::spec::Setpoint;
use faer::Mat;
use hsa_harmonic::{
    toeplitz_from_spectrum, CustomGain, HarmonicError, HarmonicIndexSet, HarmonicSpectrum, ToeplitzOperator, C64,
};

/// `ξ_h = V_D,h / V_D,0` for `h ≠ 0`, `ξ_0 = 0`.
pub fn xi_spectrum(v_d: &HarmonicSpectrum) -> Result<HarmonicSpectrum> {
    if v_d.channel_count() != 1 {
        return Err(CiderError::SingularOperatingPoint("expected the scalar D component".into()));
    }
    let v0 = v_d.get(0, 0);
    if v0.norm() == 0.0 || !v0.norm().is_finite() {
        return Err(CiderError::SingularOperatingPoint("V_D,0 is zero".into()));
    }
    Ok(HarmonicSpectrum::from_fn(v_d.index_set(), 1, |_, h| if h == 0 { C64::new(0.0, 0.0) } else { v_d.get(0, h) / v0 }))
}

/// `sup_t |ξ(t)|`, sampled densely over one period.
pub fn xi_sup_norm(xi: &HarmonicSpectrum) -> f64 {
    let n = 32 * (xi.index_set().h_max + 1);
    (0..n)
        .map(|k| xi.eval_angle(0, 2.0 * std::f64::consts::PI * k as f64 / n as f64).norm())
        .fold(0.0, f64::max)
}

/// Scalar `Ψ̂⁽ⁿ⁾ = (1/V_0) Σ_{k≤n} (−Ξ̂)^k` on the index set of `v_d`.
fn psi_scalar(v_d: &HarmonicSpectrum, n: usize) -> Result<Mat<C64>> {
    let xi = xi_spectrum(v_d)?;
    let x = toeplitz_from_spectrum(&xi).into_matrix();
    let m = x.nrows();
    let mut term = Mat::<C64>::identity(m, m);
    let mut sum = term.clone();
    for _ in 1..=n {
        term = -(&term * &x);
        sum += &term;
    }
    let inv_v0 = C64::new(1.0, 0.0) / v_d.get(0, 0);
    Ok(Mat::from_fn(m, m, |i, j| sum[(i, j)] * inv_v0))
}

/// Truncated Taylor expansion of the harmonic-domain reciprocal of `v_D`,
/// replicated over the two DQ channels. Fails if `sup|ξ| ≥ ceiling`.
pub fn reciprocal_taylor_with_ceiling(v_d: &HarmonicSpectrum, n: usize, ceiling: f64) -> Result<ToeplitzOperator> {
    let sup = xi_sup_norm(&xi_spectrum(v_d)?);
    if sup >= ceiling {
        return Err(CiderError::HypothesisViolation { sup, ceiling });
    }
    let psi = ToeplitzOperator::from_matrix(v_d.index_set(), 1, psi_scalar(v_d, n)?)?;
    Ok(psi.replicate(2)?)
}

pub fn reciprocal_taylor(v_d: &HarmonicSpectrum, n: usize) -> Result<ToeplitzOperator> {
    reciprocal_taylor_with_ceiling(v_d, n, crate::op::DEFAULT_XI_CEILING)
}

/// Instantaneous PQ law: `(i_d*, i_q*) = (P_σ, Q_σ) / v_D`.
pub fn reference_law(p: f64, q: f64, v_d: f64) -> (f64, f64) {
    (p / v_d, q / v_d)
}

#[derive(Debug, Clone)]
pub struct ReferenceSmallSignal {
    /// Nominal reference current `Ψ̂ ŵ_σ` (2 channels).
    pub w_kappa_bar: HarmonicSpectrum,
    /// Sensitivity to the D-axis grid voltage (replicated on both channels).
    pub r_rho_hat: ToeplitzOperator,
    /// Sensitivity to the setpoint.
    pub r_sigma_hat: ToeplitzOperator,
    pub taylor_order: usize,
    pub w_sigma: (f64, f64),
    /// D-axis grid voltage at the operating point.
    pub v_d: HarmonicSpectrum,
}

pub fn reference_small_signal(op: &OperatingPoint, sp: &Setpoint, n: usize) -> Result<ReferenceSmallSignal> {
    reference_small_signal_with_ceiling(op, sp, n, crate::op::DEFAULT_XI_CEILING)
}

pub fn reference_small_signal_with_ceiling(
    op: &OperatingPoint,
    sp: &Setpoint,
    n: usize,
    ceiling: f64,
) -> Result<ReferenceSmallSignal> {
    let (p, q) = sp
        .pq()
        .ok_or_else(|| CiderError::KindMismatch("grid-forming resources have no PQ reference law".into()))?;
    let v_d = op.v_d();
    let psi = reciprocal_taylor_with_ceiling(&v_d, n, ceiling)?;
    let idx = v_d.index_set();
    let mut w = HarmonicSpectrum::zeros(idx, 2);
    w.set(0, 0, C64::new(p, 0.0));
    w.set(1, 0, C64::new(q, 0.0));
    let w_kappa_bar = psi.apply(&w)?;
    let lift_w = {
        let m = idx.len();
        let mut d = Mat::<C64>::zeros(2 * m, 2 * m);
        for i in 0..m {
            d[(i, i)] = C64::new(p, 0.0);
            d[(m + i, m + i)] = C64::new(q, 0.0);
        }
        ToeplitzOperator::from_matrix(idx, 2, d)?
    };
    let r_rho_hat = psi.compose(&psi)?.compose(&lift_w)?.scaled(C64::new(-1.0, 0.0));
    Ok(ReferenceSmallSignal { w_kappa_bar, r_rho_hat, r_sigma_hat: psi, taylor_order: n, w_sigma: (p, q), v_d })
}

impl ReferenceSmallSignal {
    /// Gain from the grid voltage in DQ (2 inputs, only D used) to the
    /// current reference (2 outputs), for use inside an interconnection.
    pub fn gain(&self) -> ReferenceGain {
        ReferenceGain { w_sigma: self.w_sigma, v_d: self.v_d.clone(), taylor_order: self.taylor_order }
    }
}

/// Linearised PQ law. In time it is the exact `−w_σ / v̄_D(t)²`; lifted, it is
/// `−(Ψ̂⁽ⁿ⁾)² diag(ŵ_σ)` computed at the requested truncation.
#[derive(Debug, Clone)]
pub struct ReferenceGain {
    pub w_sigma: (f64, f64),
    pub v_d: HarmonicSpectrum,
    pub taylor_order: usize,
}

impl CustomGain for ReferenceGain {
    fn shape(&self) -> (usize, usize) {
        (2, 2)
    }

    fn eval(&self, theta: f64) -> Mat<C64> {
        let v = self.v_d.eval_angle(0, theta).re;
        let mut m = Mat::<C64>::zeros(2, 2);
        m[(0, 0)] = C64::new(-self.w_sigma.0 / (v * v), 0.0);
        m[(1, 0)] = C64::new(-self.w_sigma.1 / (v * v), 0.0);
        m
    }

    fn lift(&self, row_ranges: &[usize], col_ranges: &[usize]) -> hsa_harmonic::Result<Mat<C64>> {
        let h = row_ranges[0];
        if row_ranges.iter().chain(col_ranges).any(|&r| r != h) {
            return Err(HarmonicError::Dimension("reference gain needs equal DQ ranges".into()));
        }
        let idx = HarmonicIndexSet { h_max: h, f1: self.v_d.index_set().f1 };
        let v = self.v_d.reindexed(idx);
        let psi = psi_scalar(&v, self.taylor_order).map_err(|e| HarmonicError::Singular(e.to_string()))?;
        let psi2 = &psi * &psi;
        let m = idx.len();
        let mut out = Mat::<C64>::zeros(2 * m, 2 * m);
        for i in 0..m {
            for j in 0..m {
                out[(i, j)] = psi2[(i, j)] * (-self.w_sigma.0);
                out[(m + i, j)] = psi2[(i, j)] * (-self.w_sigma.1);
            }
        }
        Ok(out)
    }
}
