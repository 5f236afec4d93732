use crate::error::{GridError, Result};
use crate::line::{sequence_to_phase, LineSegment, SequenceParameters};
use crate::thevenin::TheveninEquivalent;
use faer::Mat;
use hsa_harmonic::{HarmonicLimits, HssModel, LtpModel, PeriodicMatrix, Provenance, Signal};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttachmentKind {
    /// Draws a current, sees the node voltage.
    Following,
    /// Imposes the node voltage, sees the current drawn by the network.
    Forming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Attachment {
    pub name: String,
    pub node: String,
    pub kind: AttachmentKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub from: String,
    pub to: String,
    pub segment: LineSegment,
}

/// Radial network fed by a single Thevenin source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkTopology {
    pub nodes: Vec<String>,
    pub branches: Vec<Branch>,
    pub source_node: String,
    pub source: TheveninEquivalent,
    pub attachments: Vec<Attachment>,
}

impl NetworkTopology {
    /// Five-node feeder: source at N01, four 30 m cable spans, following
    /// resources `n04` and `n05` at the last two nodes.
    pub fn test_system(source: TheveninEquivalent) -> Result<Self> {
        let nodes: Vec<String> = (1..=5).map(|k| format!("N0{k}")).collect();
        let seg = LineSegment::from_per_km(SequenceParameters::table_vi(), 30.0)?;
        let branches = (0..4).map(|k| Branch { from: nodes[k].clone(), to: nodes[k + 1].clone(), segment: seg }).collect();
        let attachments = vec![
            Attachment { name: "n04".into(), node: "N04".into(), kind: AttachmentKind::Following },
            Attachment { name: "n05".into(), node: "N05".into(), kind: AttachmentKind::Following },
        ];
        let t = Self { nodes, branches, source_node: "N01".into(), source, attachments };
        t.validate()?;
        Ok(t)
    }

    /// A single resource behind the source impedance.
    pub fn single_resource(source: TheveninEquivalent, kind: AttachmentKind) -> Result<Self> {
        let t = Self {
            nodes: vec!["N01".into()],
            branches: Vec::new(),
            source_node: "N01".into(),
            source,
            attachments: vec![Attachment { name: "cider".into(), node: "N01".into(), kind }],
        };
        t.validate()?;
        Ok(t)
    }

    pub fn node_index(&self, name: &str) -> Result<usize> {
        self.nodes
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| GridError::InvalidTopology(format!("unknown node {name}")))
    }

    pub fn attachment(&self, name: &str) -> Result<&Attachment> {
        self.attachments
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| GridError::InvalidTopology(format!("unknown attachment {name}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        let mut seen = std::collections::BTreeSet::new();
        for n in &self.nodes {
            if !seen.insert(n) {
                return Err(GridError::InvalidTopology(format!("duplicate node {n}")));
            }
        }
        self.node_index(&self.source_node)?;
        for b in &self.branches {
            b.segment.validate()?;
            if b.from == b.to {
                return Err(GridError::InvalidTopology(format!("self loop at {}", b.from)));
            }
            self.node_index(&b.from)?;
            self.node_index(&b.to)?;
        }
        let mut names = std::collections::BTreeSet::new();
        for a in &self.attachments {
            self.node_index(&a.node)?;
            if !names.insert(&a.name) {
                return Err(GridError::InvalidTopology(format!("duplicate attachment {}", a.name)));
            }
        }
        // Connectivity from the source node.
        let n = self.nodes.len();
        let mut adj = vec![Vec::new(); n];
        for b in &self.branches {
            let (i, j) = (self.node_index(&b.from)?, self.node_index(&b.to)?);
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut reached = vec![false; n];
        let mut q = VecDeque::from([self.node_index(&self.source_node)?]);
        while let Some(k) = q.pop_front() {
            if std::mem::replace(&mut reached[k], true) {
                continue;
            }
            q.extend(adj[k].iter().copied().filter(|&j| !reached[j]));
        }
        if let Some(k) = reached.iter().position(|r| !r) {
            return Err(GridError::Disconnected(self.nodes[k].clone()));
        }
        Ok(())
    }

    /// Sequence shunt capacitance `(pos, zero)` lumped at each node.
    pub fn node_capacitance(&self) -> Result<Vec<(f64, f64)>> {
        let mut caps = vec![(0.0, 0.0); self.nodes.len()];
        for b in &self.branches {
            let p = &b.segment.params;
            for end in [&b.from, &b.to] {
                let k = self.node_index(end)?;
                caps[k].0 += p.c_pos / 2.0;
                caps[k].1 += p.c_zero / 2.0;
            }
        }
        Ok(caps)
    }
}

/// Port group names of an attachment: `(input, output)`.
pub fn attachment_ports(a: &Attachment) -> (String, String) {
    match a.kind {
        AttachmentKind::Following => (format!("i_{}", a.name), format!("v_{}", a.name)),
        AttachmentKind::Forming => (format!("v_{}", a.name), format!("i_{}", a.name)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NodeVoltage {
    State(usize),
    Input(usize),
}

/// Constant phase-domain state-space model of the network.
///
/// States: source current `i_te`, branch currents `i_<from>_<to>` and node
/// voltages `v_<node>` of capacitive nodes. Inputs: EMF `e`, then the
/// attachment inputs. Outputs: the attachment outputs.
#[derive(Debug, Clone)]
pub struct GridModel {
    pub states: Vec<Signal>,
    pub inputs: Vec<Signal>,
    pub outputs: Vec<Signal>,
    pub a: Mat<f64>,
    pub b: Mat<f64>,
    pub c: Mat<f64>,
    pub d: Mat<f64>,
    node_voltage_state: BTreeMap<String, usize>,
}

fn add3(m: &mut Mat<f64>, r: usize, c: usize, blk: &Mat<f64>, k: f64) {
    for i in 0..3 {
        for j in 0..3 {
            m[(r + i, c + j)] += k * blk[(i, j)];
        }
    }
}

impl GridModel {
    pub fn build(t: &NetworkTopology) -> Result<Self> {
        t.validate()?;
        let caps = t.node_capacitance()?;
        let mut forming_at = BTreeMap::new();
        for a in &t.attachments {
            if a.kind == AttachmentKind::Forming && forming_at.insert(a.node.clone(), a.name.clone()).is_some() {
                return Err(GridError::InvalidTopology(format!("two forming resources at {}", a.node)));
            }
        }

        let mut states = Signal::abc("i_te");
        for b in &t.branches {
            states.extend(Signal::abc(&format!("i_{}_{}", b.from, b.to)));
        }
        let mut inputs = Signal::abc("e");
        let mut outputs = Vec::new();
        let mut in_off = BTreeMap::new();
        for a in &t.attachments {
            let (i, o) = attachment_ports(a);
            in_off.insert(a.name.clone(), inputs.len());
            inputs.extend(Signal::abc(&i));
            outputs.extend(Signal::abc(&o));
        }
        let mut volt = Vec::with_capacity(t.nodes.len());
        let mut node_voltage_state = BTreeMap::new();
        for (k, n) in t.nodes.iter().enumerate() {
            let has_cap = caps[k].0 > 0.0;
            match (forming_at.get(n), has_cap) {
                (Some(_), true) => {
                    return Err(GridError::InvalidTopology(format!(
                        "forming resource at {n} would be in parallel with line capacitance"
                    )))
                }
                (Some(name), false) => volt.push(NodeVoltage::Input(in_off[name])),
                (None, true) => {
                    node_voltage_state.insert(n.clone(), states.len());
                    volt.push(NodeVoltage::State(states.len()));
                    states.extend(Signal::abc(&format!("v_{n}")));
                }
                (None, false) => {
                    return Err(GridError::InvalidTopology(format!(
                        "node {n} has neither shunt capacitance nor an imposed voltage"
                    )))
                }
            }
        }
        for a in &t.attachments {
            if a.kind == AttachmentKind::Following && !matches!(volt[t.node_index(&a.node)?], NodeVoltage::State(_)) {
                return Err(GridError::InvalidTopology(format!("following resource at capless node {}", a.node)));
            }
        }

        let (nx, nu, ny) = (states.len(), inputs.len(), outputs.len());
        let mut m = Self {
            a: Mat::zeros(nx, nx),
            b: Mat::zeros(nx, nu),
            c: Mat::zeros(ny, nx),
            d: Mat::zeros(ny, nu),
            states,
            inputs,
            outputs,
            node_voltage_state,
        };
        let eye = sequence_to_phase(1.0, 1.0);

        // v_from − v_to − R i = L di/dt, for the source branch and the lines.
        let put_voltage = |m: &mut Self, row: usize, lin: &Mat<f64>, v: NodeVoltage, k: f64| match v {
            NodeVoltage::State(s) => add3(&mut m.a, row, s, lin, k),
            NodeVoltage::Input(i) => add3(&mut m.b, row, i, lin, k),
        };
        let (r_te, l_te) = t.source.r_l()?;
        let src = t.node_index(&t.source_node)?;
        let linv = sequence_to_phase(1.0 / l_te, 1.0 / l_te);
        add3(&mut m.a, 0, 0, &linv, -r_te);
        add3(&mut m.b, 0, 0, &linv, 1.0);
        put_voltage(&mut m, 0, &linv, volt[src], -1.0);
        // Currents into each node, as (state offset, sign).
        let mut into: Vec<Vec<(usize, f64)>> = vec![Vec::new(); t.nodes.len()];
        into[src].push((0, 1.0));
        for (k, b) in t.branches.iter().enumerate() {
            let row = 3 + 3 * k;
            let p = &b.segment.params;
            let linv = sequence_to_phase(1.0 / p.l_pos, 1.0 / p.l_zero);
            add3(&mut m.a, row, row, &(&linv * &b.segment.resistance()), -1.0);
            let (f, to) = (t.node_index(&b.from)?, t.node_index(&b.to)?);
            put_voltage(&mut m, row, &linv, volt[f], 1.0);
            put_voltage(&mut m, row, &linv, volt[to], -1.0);
            into[f].push((row, -1.0));
            into[to].push((row, 1.0));
        }
        // C dv/dt = Σ currents in − drawn current.
        for (k, v) in volt.iter().enumerate() {
            if let NodeVoltage::State(s) = *v {
                let cinv = sequence_to_phase(1.0 / caps[k].0, 1.0 / caps[k].1);
                for &(r, sg) in &into[k] {
                    add3(&mut m.a, s, r, &cinv, sg);
                }
                for a in t.attachments.iter().filter(|a| a.node == t.nodes[k]) {
                    add3(&mut m.b, s, in_off[&a.name], &cinv, -1.0);
                }
            }
        }
        for (ai, a) in t.attachments.iter().enumerate() {
            let k = t.node_index(&a.node)?;
            match (a.kind, volt[k]) {
                (AttachmentKind::Following, NodeVoltage::State(s)) => add3(&mut m.c, 3 * ai, s, &eye, 1.0),
                (AttachmentKind::Forming, _) => {
                    for &(r, sg) in &into[k] {
                        add3(&mut m.c, 3 * ai, r, &eye, sg);
                    }
                }
                _ => unreachable!(),
            }
        }
        Ok(m)
    }

    /// State offset of the voltage of a capacitive node.
    pub fn node_voltage_state(&self, node: &str) -> Option<usize> {
        self.node_voltage_state.get(node).copied()
    }

    pub fn ltp(&self) -> Result<LtpModel> {
        let k = |m: &Mat<f64>| PeriodicMatrix::constant_real(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
        Ok(LtpModel::primitive(
            "grid",
            self.states.clone(),
            self.inputs.clone(),
            self.outputs.clone(),
            k(&self.a),
            k(&self.b),
            k(&self.c),
            k(&self.d),
        )?)
    }
}

/// Harmonic-domain model of the network.
pub fn grid_hss(t: &NetworkTopology, limits: &HarmonicLimits) -> Result<HssModel> {
    let g = GridModel::build(t)?;
    Ok(HssModel::from_ltp(&g.ltp()?, limits, Provenance::OpenLoopGrid)?)
}
