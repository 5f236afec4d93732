use crate::error::{CiderError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiderKind {
    GridForming,
    GridFollowingAc,
    GridFollowingDc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    Inductor,
    Capacitor,
    DcLinkCapacitor,
}

/// Stage labels, named after the subscripts used for the filter elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageLabel {
    Delta,
    Alpha,
    Phi,
    Gamma,
}

impl StageLabel {
    pub fn name(self) -> &'static str {
        match self {
            StageLabel::Delta => "delta",
            StageLabel::Alpha => "alpha",
            StageLabel::Phi => "phi",
            StageLabel::Gamma => "gamma",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "delta" => Some(StageLabel::Delta),
            "alpha" => Some(StageLabel::Alpha),
            "phi" => Some(StageLabel::Phi),
            "gamma" => Some(StageLabel::Gamma),
            _ => None,
        }
    }
}

/// Passive element: `value` is L (H) or C (F), `loss` is R (Ω) or G (S).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterStage {
    pub kind: FilterKind,
    pub value: f64,
    pub loss: f64,
}

/// PI tracker `K_fb (e + ∫e / T_fb) + K_ft · feed-forward`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerStage {
    pub k_fb: f64,
    pub t_fb: f64,
    pub k_ft: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    pub label: StageLabel,
    pub filter: FilterStage,
    pub controller: ControllerStage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Setpoint {
    /// Voltage magnitude (V RMS, line-to-neutral) and frequency (Hz).
    Forming { v_sigma: f64, f_sigma: f64 },
    /// Active and reactive power setpoints; negative values inject.
    Following { p_sigma: f64, q_sigma: f64 },
    /// As `Following`, plus the DC-link voltage reference (V).
    FollowingDc { p_sigma: f64, q_sigma: f64, v_delta_ref: f64 },
}

impl Setpoint {
    /// `(P_σ, Q_σ)` for following kinds.
    pub fn pq(&self) -> Option<(f64, f64)> {
        match *self {
            Setpoint::Forming { .. } => None,
            Setpoint::Following { p_sigma, q_sigma } | Setpoint::FollowingDc { p_sigma, q_sigma, .. } => {
                Some((p_sigma, q_sigma))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CiderSpec {
    pub kind: CiderKind,
    pub stages: Vec<Stage>,
    pub setpoint: Setpoint,
    pub rated_power: f64,
}

/// Parameter addressed inside a spec, e.g. `alpha.k_fb`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamPath {
    pub stage: StageLabel,
    pub field: ParamField,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamField {
    Value,
    Loss,
    KFb,
    TFb,
    KFt,
}

impl ParamPath {
    pub fn parse(s: &str) -> Result<Self> {
        let (st, f) = s.split_once('.').ok_or_else(|| CiderError::UnknownParameter(s.to_string()))?;
        let stage = StageLabel::parse(st).ok_or_else(|| CiderError::UnknownParameter(s.to_string()))?;
        let field = match f {
            "value" => ParamField::Value,
            "loss" => ParamField::Loss,
            "k_fb" => ParamField::KFb,
            "t_fb" => ParamField::TFb,
            "k_ft" => ParamField::KFt,
            _ => return Err(CiderError::UnknownParameter(s.to_string())),
        };
        Ok(Self { stage, field })
    }

    pub fn is_control(&self) -> bool {
        matches!(self.field, ParamField::KFb | ParamField::TFb | ParamField::KFt)
    }
}

impl std::fmt::Display for ParamPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let field = match self.field {
            ParamField::Value => "value",
            ParamField::Loss => "loss",
            ParamField::KFb => "k_fb",
            ParamField::TFb => "t_fb",
            ParamField::KFt => "k_ft",
        };
        write!(f, "{}.{}", self.stage.name(), field)
    }
}

fn inductor(l: f64, r: f64) -> FilterStage {
    FilterStage { kind: FilterKind::Inductor, value: l, loss: r }
}

fn capacitor(c: f64, g: f64) -> FilterStage {
    FilterStage { kind: FilterKind::Capacitor, value: c, loss: g }
}

fn pi(k_fb: f64, t_fb: f64, k_ft: f64) -> ControllerStage {
    ControllerStage { k_fb, t_fb, k_ft }
}

impl CiderSpec {
    /// Grid-forming resource, 40 kVA.
    pub fn default_forming() -> Self {
        Self {
            kind: CiderKind::GridForming,
            stages: vec![
                Stage { label: StageLabel::Alpha, filter: inductor(0.49e-3, 1.53e-3), controller: pi(4.0, 8e-4, 1.0) },
                Stage { label: StageLabel::Phi, filter: capacitor(60.2e-6, 0.0), controller: pi(1.5, 1e-3, 0.0) },
            ],
            setpoint: Setpoint::Forming { v_sigma: 230.0, f_sigma: 50.0 },
            rated_power: 40e3,
        }
    }

    /// Grid-following resource, AC side only, 60 kVA.
    pub fn default_following_ac() -> Self {
        Self {
            kind: CiderKind::GridFollowingAc,
            stages: vec![
                Stage { label: StageLabel::Alpha, filter: inductor(325e-6, 1.02e-3), controller: pi(5.0, 5e-4, 1.0) },
                Stage { label: StageLabel::Phi, filter: capacitor(90.3e-6, 0.0), controller: pi(1.0, 8e-4, 0.0) },
                Stage { label: StageLabel::Gamma, filter: inductor(325e-6, 1.02e-3), controller: pi(1.0, 1e-3, 1.0) },
            ],
            setpoint: Setpoint::Following { p_sigma: -50e3, q_sigma: -16.4e3 },
            rated_power: 60e3,
        }
    }

    /// Grid-following resource including the DC link, 60 kVA.
    pub fn default_following_dc() -> Self {
        Self {
            kind: CiderKind::GridFollowingDc,
            stages: vec![
                Stage {
                    label: StageLabel::Delta,
                    filter: FilterStage { kind: FilterKind::DcLinkCapacitor, value: 310e-6, loss: 0.0 },
                    controller: pi(10.0, 1e-2, 0.0),
                },
                Stage { label: StageLabel::Alpha, filter: inductor(325e-6, 1.02e-3), controller: pi(2.5, 5e-4, 1.0) },
                Stage { label: StageLabel::Phi, filter: capacitor(90.3e-6, 0.0), controller: pi(0.8, 1e-3, 0.0) },
                Stage { label: StageLabel::Gamma, filter: inductor(325e-6, 1.02e-3), controller: pi(0.5, 5e-3, 1.0) },
            ],
            setpoint: Setpoint::FollowingDc { p_sigma: -50e3, q_sigma: -16.4e3, v_delta_ref: 900.0 },
            rated_power: 60e3,
        }
    }

    pub fn stage(&self, label: StageLabel) -> Result<&Stage> {
        self.stages
            .iter()
            .find(|s| s.label == label)
            .ok_or_else(|| CiderError::InvalidSpec(format!("missing stage {}", label.name())))
    }

    fn expected_labels(&self) -> &'static [StageLabel] {
        match self.kind {
            CiderKind::GridForming => &[StageLabel::Alpha, StageLabel::Phi],
            CiderKind::GridFollowingAc => &[StageLabel::Alpha, StageLabel::Phi, StageLabel::Gamma],
            CiderKind::GridFollowingDc => &[StageLabel::Delta, StageLabel::Alpha, StageLabel::Phi, StageLabel::Gamma],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let labels: Vec<StageLabel> = self.stages.iter().map(|s| s.label).collect();
        if labels != self.expected_labels() {
            return Err(CiderError::InvalidSpec(format!(
                "{:?} expects stages {:?}, got {:?}",
                self.kind,
                self.expected_labels(),
                labels
            )));
        }
        for s in &self.stages {
            let want = match s.label {
                StageLabel::Delta => FilterKind::DcLinkCapacitor,
                StageLabel::Alpha | StageLabel::Gamma => FilterKind::Inductor,
                StageLabel::Phi => FilterKind::Capacitor,
            };
            let n = s.label.name();
            if s.filter.kind != want {
                return Err(CiderError::InvalidSpec(format!("stage {n} must be {want:?}")));
            }
            if !(s.filter.value > 0.0) || !s.filter.value.is_finite() {
                return Err(CiderError::InvalidSpec(format!("stage {n}: L/C must be positive")));
            }
            if !(s.filter.loss >= 0.0) || !s.filter.loss.is_finite() {
                return Err(CiderError::InvalidSpec(format!("stage {n}: R/G must be nonnegative")));
            }
            let c = &s.controller;
            if !(c.k_fb > 0.0 && c.t_fb > 0.0 && c.k_ft >= 0.0) || !(c.k_fb.is_finite() && c.t_fb.is_finite() && c.k_ft.is_finite()) {
                return Err(CiderError::InvalidSpec(format!("stage {n}: need K_fb > 0, T_fb > 0, K_ft ≥ 0")));
            }
        }
        match (self.kind, self.setpoint) {
            (CiderKind::GridForming, Setpoint::Forming { v_sigma, f_sigma }) => {
                if !(v_sigma > 0.0 && f_sigma > 0.0) {
                    return Err(CiderError::InvalidSpec("forming setpoints must be positive".into()));
                }
            }
            (CiderKind::GridFollowingAc, Setpoint::Following { p_sigma, q_sigma }) => {
                if !(p_sigma.is_finite() && q_sigma.is_finite()) {
                    return Err(CiderError::InvalidSpec("PQ setpoints must be finite".into()));
                }
            }
            (CiderKind::GridFollowingDc, Setpoint::FollowingDc { p_sigma, q_sigma, v_delta_ref }) => {
                if !(p_sigma.is_finite() && q_sigma.is_finite() && v_delta_ref > 0.0) {
                    return Err(CiderError::InvalidSpec("need finite PQ and positive V_δ*".into()));
                }
            }
            (k, s) => return Err(CiderError::InvalidSpec(format!("setpoint {s:?} does not fit {k:?}"))),
        }
        if !(self.rated_power > 0.0) {
            return Err(CiderError::InvalidSpec("rated power must be positive".into()));
        }
        Ok(())
    }

    pub fn param(&self, p: ParamPath) -> Result<f64> {
        let s = self.stage(p.stage)?;
        Ok(match p.field {
            ParamField::Value => s.filter.value,
            ParamField::Loss => s.filter.loss,
            ParamField::KFb => s.controller.k_fb,
            ParamField::TFb => s.controller.t_fb,
            ParamField::KFt => s.controller.k_ft,
        })
    }

    pub fn with_param(&self, p: ParamPath, v: f64) -> Result<Self> {
        let mut out = self.clone();
        let s = out
            .stages
            .iter_mut()
            .find(|s| s.label == p.stage)
            .ok_or_else(|| CiderError::UnknownParameter(p.to_string()))?;
        match p.field {
            ParamField::Value => s.filter.value = v,
            ParamField::Loss => s.filter.loss = v,
            ParamField::KFb => s.controller.k_fb = v,
            ParamField::TFb => s.controller.t_fb = v,
            ParamField::KFt => s.controller.k_ft = v,
        }
        Ok(out)
    }

    /// Every parameter path of the spec; `control_only` restricts to the
    /// controller gains and time constants.
    pub fn param_paths(&self, control_only: bool) -> Vec<ParamPath> {
        let mut v = Vec::new();
        for s in &self.stages {
            let fields: &[ParamField] = if control_only {
                &[ParamField::KFb, ParamField::TFb, ParamField::KFt]
            } else {
                &[ParamField::Value, ParamField::Loss, ParamField::KFb, ParamField::TFb, ParamField::KFt]
            };
            v.extend(fields.iter().map(|&field| ParamPath { stage: s.label, field }));
        }
        v
    }

    /// Scales every listed parameter by `1 + delta`.
    pub fn perturbed(&self, paths: &[ParamPath], delta: f64) -> Result<Self> {
        let mut s = self.clone();
        for &p in paths {
            s = s.with_param(p, s.param(p)? * (1.0 + delta))?;
        }
        Ok(s)
    }
}
