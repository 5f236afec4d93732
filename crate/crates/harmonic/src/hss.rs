use crate::error::{HarmonicError, Result};
use crate::index::{HarmonicIndexSet, HarmonicLimits};
use crate::ltp::{Context, LtpModel};
use crate::signal::Signal;
use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    OpenLoopResource,
    OpenLoopGrid,
    ClosedLoop,
    LtiCounterpart,
}

/// A scalar signal at one harmonic order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LiftedLabel {
    pub signal: Signal,
    pub order: i32,
}

/// Lifted labels in storage order (signal-major, orders ascending).
pub fn lifted_labels(signals: &[Signal], limits: &HarmonicLimits) -> Vec<LiftedLabel> {
    let mut v = Vec::new();
    for s in signals {
        let h = limits.range(s.domain) as i32;
        for k in -h..=h {
            v.push(LiftedLabel { signal: s.clone(), order: k });
        }
    }
    v
}

/// Harmonic state-space model `Ẋ = Ã X + B̂ U`, `Y = Ĉ X + D̂ U`, with `Ã = Â − N̂`.
#[derive(Debug, Clone)]
pub struct HssModel {
    pub a_tilde: Mat<C64>,
    pub b_hat: Mat<C64>,
    pub c_hat: Mat<C64>,
    pub d_hat: Mat<C64>,
    pub limits: HarmonicLimits,
    pub states: Vec<LiftedLabel>,
    pub inputs: Vec<LiftedLabel>,
    pub outputs: Vec<LiftedLabel>,
    pub provenance: Provenance,
}

impl HssModel {
    /// Lifts an LTP model and subtracts the frequency-shift operator.
    pub fn from_ltp(model: &LtpModel, limits: &HarmonicLimits, provenance: Provenance) -> Result<Self> {
        let r = model.realize(Context::Harmonic(limits))?;
        let states = lifted_labels(model.states(), limits);
        let mut a = r.a;
        let w = limits.omega();
        for (i, l) in states.iter().enumerate() {
            a[(i, i)] -= C64::new(0.0, l.order as f64 * w);
        }
        Ok(Self {
            a_tilde: a,
            b_hat: r.b,
            c_hat: r.c,
            d_hat: r.d,
            limits: *limits,
            states,
            inputs: lifted_labels(model.inputs(), limits),
            outputs: lifted_labels(model.outputs(), limits),
            provenance,
        })
    }

    /// Index set of the hardware (ABC) side.
    pub fn idx(&self) -> HarmonicIndexSet {
        self.limits.abc()
    }

    pub fn state_dim(&self) -> usize {
        self.a_tilde.nrows()
    }

    /// Frobenius norm of `Ã`.
    pub fn a_norm(&self) -> f64 {
        self.a_tilde.norm_l2()
    }

    /// Periodic steady state for a constant lifted input: `X = −Ã⁻¹ B̂ U`, `Y = Ĉ X + D̂ U`.
    pub fn steady_state(&self, u: &[C64]) -> Result<(Vec<C64>, Vec<C64>)> {
        if u.len() != self.b_hat.ncols() {
            return Err(HarmonicError::Dimension(format!("input has {} entries, expected {}", u.len(), self.b_hat.ncols())));
        }
        let uc = Mat::from_fn(u.len(), 1, |i, _| u[i]);
        let bu = &self.b_hat * &uc;
        let x = self.a_tilde.partial_piv_lu().solve(&bu);
        let x = Mat::from_fn(x.nrows(), 1, |i, _| -x[(i, 0)]);
        let y = &self.c_hat * &x + &self.d_hat * &uc;
        Ok(((0..x.nrows()).map(|i| x[(i, 0)]).collect(), (0..y.nrows()).map(|i| y[(i, 0)]).collect()))
    }
}
