use crate::error::{Result, SystemError};
use hsa_cider::{CiderKind, CiderSpec, ParamPath};
use hsa_grid::{AttachmentKind, NetworkTopology, TheveninEquivalent};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CiderAttachment {
    /// Name of the topology attachment.
    pub name: String,
    pub spec: CiderSpec,
}

/// Network plus the resources at its attachments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDescription {
    pub topology: NetworkTopology,
    pub ciders: Vec<CiderAttachment>,
}

impl SystemDescription {
    /// Five-node feeder with two following resources; the one at N04 has
    /// its innermost feedback gain raised to 16.
    pub fn test_system(source: TheveninEquivalent) -> Result<Self> {
        let topology = NetworkTopology::test_system(source)?;
        let base = CiderSpec::default_following_ac();
        let n04 = base.with_param(ParamPath::parse("alpha.k_fb")?, 16.0)?;
        let s = Self {
            topology,
            ciders: vec![CiderAttachment { name: "n04".into(), spec: n04 }, CiderAttachment { name: "n05".into(), spec: base }],
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.topology.validate()?;
        if self.ciders.len() != self.topology.attachments.len() {
            return Err(SystemError::PortMismatch("every attachment needs exactly one resource".into()));
        }
        for c in &self.ciders {
            c.spec.validate()?;
            let a = self.topology.attachment(&c.name)?;
            let ok = match a.kind {
                AttachmentKind::Forming => c.spec.kind == CiderKind::GridForming,
                AttachmentKind::Following => c.spec.kind != CiderKind::GridForming,
            };
            if !ok {
                return Err(SystemError::PortMismatch(format!("{} attachment does not fit a {:?} resource", c.name, c.spec.kind)));
            }
        }
        Ok(())
    }

    pub fn cider(&self, name: &str) -> Result<&CiderAttachment> {
        self.ciders
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| SystemError::PortMismatch(format!("no resource named {name}")))
    }

    /// Copy with one resource parameter replaced.
    pub fn with_param(&self, cider: &str, path: ParamPath, value: f64) -> Result<Self> {
        let mut s = self.clone();
        let c = s
            .ciders
            .iter_mut()
            .find(|c| c.name == cider)
            .ok_or_else(|| SystemError::PortMismatch(format!("no resource named {cider}")))?;
        c.spec = c.spec.with_param(path, value)?;
        Ok(s)
    }
}
