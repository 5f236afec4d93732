use crate::error::{CliError, Result};
use hsa_cider::{CiderKind, ParamPath, MAX_TAYLOR_ORDER};
use hsa_engine::Schedule;
use hsa_grid::{Attachment, Branch, NetworkTopology, TheveninEquivalent};
use hsa_harmonic::HarmonicLimits;
use hsa_system::{CiderAttachment, HpfMode, HpfOptions, SystemDescription};
use hsa_tds::{SettleCriterion, TdsConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    #[serde(default)]
    pub description: String,
    /// Where the parameter values come from.
    #[serde(default)]
    pub provenance: String,
    pub system: SystemBlock,
    pub thevenin: TheveninEquivalent,
    /// Omitted for single-resource analyses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkBlock>,
    pub ciders: Vec<CiderAttachment>,
    pub analysis: Analysis,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub f1: f64,
    pub h_abc: usize,
    /// Must be `h_abc + 1` when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_dqz: Option<usize>,
    #[serde(default = "default_taylor")]
    pub taylor_order: usize,
}

fn default_taylor() -> usize {
    hsa_cider::DEFAULT_TAYLOR_ORDER
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkBlock {
    pub nodes: Vec<String>,
    pub source_node: String,
    pub lines: Vec<Branch>,
    pub attachments: Vec<Attachment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json, Format::Svg]
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { directory: None, formats: default_formats() }
    }
}

/// Model whose eigenvalues a sensitivity sweep follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepModel {
    /// Single resource, harmonic domain at `system.h_abc`.
    ResourceLtp,
    /// Single resource, rotating-frame LTI counterpart.
    ResourceLti,
    /// Closed-loop system, LTI counterpart around the fundamental power flow.
    SystemLti,
    /// Closed-loop system, harmonic domain, zero-distortion power flow.
    SystemLtp,
    /// Closed-loop system, harmonic domain, power flow with source harmonics.
    SystemLtpHarmonics,
}

impl SweepModel {
    pub fn is_system(self) -> bool {
        !matches!(self, SweepModel::ResourceLtp | SweepModel::ResourceLti)
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepModel::ResourceLtp => "resource_ltp",
            SweepModel::ResourceLti => "resource_lti",
            SweepModel::SystemLti => "system_lti",
            SweepModel::SystemLtp => "system_ltp",
            SweepModel::SystemLtpHarmonics => "system_ltp_harmonics",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaircaseBlock {
    /// One experiment per entry: with and/or without source harmonics.
    pub harmonics: Vec<bool>,
    pub tds: TdsConfig,
    pub settle: SettleCriterion,
}

fn default_delta() -> f64 {
    1e-2
}
fn default_eps_rel() -> f64 {
    1e-9
}
fn default_set_tol() -> f64 {
    1e-6
}
fn default_floor() -> f64 {
    1e-3
}
fn default_edge_floor() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Analysis {
    /// CDV/CDI/DI labels of a single resource.
    Classify {
        #[serde(default = "default_delta")]
        delta: f64,
        #[serde(default = "default_eps_rel")]
        eps_rel: f64,
        /// Real-part tolerance (relative to `‖Ã‖`) when grouping labelled sets.
        #[serde(default = "default_set_tol")]
        set_tol: f64,
        /// Eigenvector support floor relative to the largest entry.
        #[serde(default = "default_floor")]
        support_floor: f64,
    },
    /// `d(h_max)` between the LTI counterpart and the harmonic model of a
    /// single resource.
    TruncationStudy {
        h_values: Vec<usize>,
        /// Source harmonics in the internal steady state (DC-side resources).
        #[serde(default)]
        harmonics: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tds: Option<TdsConfig>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        settle: Option<SettleCriterion>,
    },
    Sensitivity {
        /// Resource whose parameter is swept; the only resource by default.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<String>,
        /// Dotted parameter path, e.g. `alpha.k_fb`.
        parameter: String,
        schedule: Schedule,
        models: Vec<SweepModel>,
        #[serde(default = "default_edge_floor")]
        edge_floor: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        staircase: Option<StaircaseBlock>,
    },
    /// Closed-loop eigenvalues around each power-flow mode.
    SystemHsa {
        modes: Vec<HpfMode>,
        #[serde(default = "default_edge_floor")]
        edge_floor: f64,
    },
    /// Nodal spectra of the power flow against a settled simulation.
    TdsValidate {
        nodes: Vec<String>,
        mode: HpfMode,
        tds: TdsConfig,
        settle: SettleCriterion,
    },
    Hpf {
        mode: HpfMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        options: Option<HpfOptions>,
    },
}

impl Analysis {
    pub fn name(&self) -> &'static str {
        match self {
            Analysis::Classify { .. } => "classify",
            Analysis::TruncationStudy { .. } => "truncation_study",
            Analysis::Sensitivity { .. } => "sensitivity",
            Analysis::SystemHsa { .. } => "system_hsa",
            Analysis::TdsValidate { .. } => "tds_validate",
            Analysis::Hpf { .. } => "hpf",
        }
    }

    fn needs_network(&self) -> Option<bool> {
        match self {
            Analysis::Classify { .. } | Analysis::TruncationStudy { .. } => Some(false),
            Analysis::SystemHsa { .. } | Analysis::TdsValidate { .. } | Analysis::Hpf { .. } => Some(true),
            Analysis::Sensitivity { models, .. } => {
                let sys = models.iter().filter(|m| m.is_system()).count();
                if sys == models.len() {
                    Some(true)
                } else if sys == 0 {
                    Some(false)
                } else {
                    None
                }
            }
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        Self::from_value(v)
    }

    pub fn from_value(v: Value) -> Result<Self> {
        serde_json::from_value(v).map_err(|e| invalid(format!("config: {e}")))
    }

    /// Parses, applies `key=value` overrides on dotted paths, and validates.
    pub fn load(text: &str, overrides: &[String]) -> Result<Self> {
        let mut v: Value = serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        for o in overrides {
            apply_override(&mut v, o)?;
        }
        let c = Self::from_value(v)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn limits(&self) -> Result<HarmonicLimits> {
        HarmonicLimits::new(self.system.f1, self.system.h_abc).map_err(|e| invalid(e.to_string()))
    }

    /// Full system description; `None` for single-resource scenarios.
    pub fn system_description(&self) -> Result<Option<SystemDescription>> {
        let Some(n) = &self.network else { return Ok(None) };
        let topology = NetworkTopology {
            nodes: n.nodes.clone(),
            branches: n.lines.clone(),
            source_node: n.source_node.clone(),
            source: self.thevenin.clone(),
            attachments: n.attachments.clone(),
        };
        let sys = SystemDescription { topology, ciders: self.ciders.clone() };
        sys.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(Some(sys))
    }

    /// The only resource of a single-resource scenario.
    pub fn resource(&self) -> Result<&CiderAttachment> {
        match self.ciders.as_slice() {
            [c] => Ok(c),
            _ => Err(invalid("single-resource analysis needs exactly one resource")),
        }
    }

    /// Checks everything that can be checked without computing.
    pub fn validate(&self) -> Result<()> {
        let s = &self.system;
        if !(s.f1 > 0.0 && s.f1.is_finite()) {
            return Err(invalid("system.f1 must be positive"));
        }
        self.limits()?;
        if let Some(h) = s.h_dqz {
            if h != s.h_abc + 1 {
                return Err(invalid(format!("system.h_dqz must be h_abc + 1 = {}", s.h_abc + 1)));
            }
        }
        if s.taylor_order > MAX_TAYLOR_ORDER {
            return Err(invalid(format!("system.taylor_order above {MAX_TAYLOR_ORDER}")));
        }
        self.thevenin.validate().map_err(|e| invalid(format!("thevenin: {e}")))?;
        if self.thevenin.f1 != s.f1 {
            return Err(invalid("thevenin.f1 differs from system.f1"));
        }
        if self.ciders.is_empty() {
            return Err(invalid("no resources"));
        }
        for c in &self.ciders {
            c.spec.validate().map_err(|e| invalid(format!("{}: {e}", c.name)))?;
        }
        let sys = self.system_description()?;
        match (self.analysis.needs_network(), &sys) {
            (None, _) => return Err(invalid("sweep mixes resource and system models")),
            (Some(true), None) => return Err(invalid(format!("{} needs a network block", self.analysis.name()))),
            (Some(false), Some(_)) => return Err(invalid(format!("{} works on a single resource without network", self.analysis.name()))),
            (Some(false), None) => {
                self.resource()?;
            }
            _ => {}
        }
        match &self.analysis {
            Analysis::Classify { delta, eps_rel, set_tol, support_floor } => {
                for (k, v) in [("delta", delta), ("eps_rel", eps_rel), ("set_tol", set_tol), ("support_floor", support_floor)] {
                    if !(*v > 0.0 && v.is_finite()) {
                        return Err(invalid(format!("analysis.{k} must be positive")));
                    }
                }
                if self.resource()?.spec.kind == CiderKind::GridFollowingDc {
                    return Err(invalid("classify supports AC-side resources only"));
                }
            }
            Analysis::TruncationStudy { h_values, tds, settle, .. } => {
                if h_values.is_empty() || h_values.contains(&0) {
                    return Err(invalid("analysis.h_values must be nonempty and positive"));
                }
                if self.resource()?.spec.kind == CiderKind::GridFollowingDc {
                    let cfg = tds.clone().unwrap_or_default();
                    cfg.validate(s.f1).map_err(|e| invalid(e.to_string()))?;
                    settle.unwrap_or_default().validate().map_err(|e| invalid(e.to_string()))?;
                }
            }
            Analysis::Sensitivity { target, parameter, schedule, models, edge_floor, staircase } => {
                let path = ParamPath::parse(parameter).map_err(|e| invalid(e.to_string()))?;
                let c = self.target(target.as_deref())?;
                c.spec.param(path).map_err(|e| invalid(e.to_string()))?;
                if models.is_empty() {
                    return Err(invalid("analysis.models is empty"));
                }
                if !(schedule.relative_step.is_finite() && schedule.relative_step > -1.0) {
                    return Err(invalid("analysis.schedule.relative_step must exceed -1"));
                }
                if models.iter().any(|m| !m.is_system()) && c.spec.kind == CiderKind::GridFollowingDc {
                    return Err(invalid("resource sweeps support AC-side resources only"));
                }
                if !(*edge_floor > 0.0) {
                    return Err(invalid("analysis.edge_floor must be positive"));
                }
                if let Some(st) = staircase {
                    if sys.is_none() {
                        return Err(invalid("staircase needs a network block"));
                    }
                    if st.harmonics.is_empty() {
                        return Err(invalid("staircase.harmonics is empty"));
                    }
                    st.tds.validate(s.f1).map_err(|e| invalid(e.to_string()))?;
                    st.settle.validate().map_err(|e| invalid(e.to_string()))?;
                }
            }
            Analysis::SystemHsa { modes, edge_floor } => {
                if modes.is_empty() {
                    return Err(invalid("analysis.modes is empty"));
                }
                if !(*edge_floor > 0.0) {
                    return Err(invalid("analysis.edge_floor must be positive"));
                }
            }
            Analysis::TdsValidate { nodes, tds, settle, .. } => {
                let sys = sys.as_ref().expect("checked above");
                for n in nodes {
                    sys.topology.node_index(n).map_err(|e| invalid(e.to_string()))?;
                }
                tds.validate(s.f1).map_err(|e| invalid(e.to_string()))?;
                settle.validate().map_err(|e| invalid(e.to_string()))?;
            }
            Analysis::Hpf { options, .. } => {
                if let Some(o) = options {
                    if !(o.tol > 0.0 && o.max_iter > 0 && o.damping > 0.0 && o.damping <= 1.0) {
                        return Err(invalid("analysis.options out of range"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn target(&self, name: Option<&str>) -> Result<&CiderAttachment> {
        match name {
            None => self.resource(),
            Some(n) => self.ciders.iter().find(|c| c.name == n).ok_or_else(|| invalid(format!("no resource named {n}"))),
        }
    }
}

/// Sets `path` (dot separated, numeric segments index arrays) to `value`,
/// read as JSON when it parses and as a string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment.split_once('=').ok_or_else(|| invalid(format!("override `{assignment}` is not key=value")))?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        cur = match cur {
            Value::Object(m) => {
                if last {
                    m.insert(seg.to_string(), value);
                    return Ok(());
                }
                m.entry(seg.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(a) => {
                let k: usize = seg.parse().map_err(|_| invalid(format!("override `{path}`: `{seg}` is not an index")))?;
                let slot = a.get_mut(k).ok_or_else(|| invalid(format!("override `{path}`: index {k} out of range")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(invalid(format!("override `{path}`: `{seg}` is not inside an object or array"))),
        };
    }
    Err(invalid("empty override path"))
}
