use crate::description::SystemDescription;
use crate::error::{Result, SystemError};
use hsa_cider::{build_ltp_model, port_input_group, port_output_group, CiderKind, OperatingPoint};
use hsa_grid::{attachment_ports, AttachmentKind, GridModel};
use hsa_harmonic::{
    Composite, Domain, Gain, HarmonicLimits, HssModel, LtpModel, PeriodicMatrix, Provenance, Signal,
};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Per-resource operating points keyed by attachment name.
pub type OperatingPoints = BTreeMap<String, OperatingPoint>;

/// How the current reference of a following resource is produced.
enum RefMode<'a> {
    /// External input `ref_<name>` (open loop, used by the power flow).
    External,
    /// Linearised PQ law around the given operating points.
    Linearised { ops: &'a OperatingPoints, taylor_order: usize },
}

fn assemble(sys: &SystemDescription, mode: RefMode<'_>, internal_ops: Option<&OperatingPoints>) -> Result<LtpModel> {
    sys.validate()?;
    let grid = GridModel::build(&sys.topology)?;
    let mut c = Composite::new("system");
    let g = c.add_child(grid.ltp()?);
    let w_e = c.add_inputs(Signal::abc("e"));
    c.feed(w_e, g, "e", PeriodicMatrix::identity(3))?;
    for att in &sys.topology.attachments {
        let res = sys.cider(&att.name)?;
        let kind = res.spec.kind;
        let op = internal_ops.and_then(|o| o.get(&att.name));
        if kind == CiderKind::GridFollowingDc && op.is_none() {
            return Err(SystemError::Unsupported(format!("{}: DC-side resource needs an internal operating point", att.name)));
        }
        let mut m = build_ltp_model(&res.spec, op)?;
        m.name = att.name.clone();
        let k = c.add_child(m);
        let (g_in, g_out) = attachment_ports(att);
        let eye3 = || PeriodicMatrix::identity(3);
        c.connect(g, &g_out, k, port_input_group(kind), eye3())?;
        c.connect(k, port_output_group(kind), g, &g_in, eye3())?;
        if kind == CiderKind::GridFollowingDc {
            let w = c.add_inputs(Signal::dc(&format!("i_src_{}", att.name), Domain::Hardware));
            c.feed(w, k, "i_src", PeriodicMatrix::identity(1))?;
            let w = c.add_inputs(Signal::dc(&format!("v_delta_ref_{}", att.name), Domain::Software));
            c.feed(w, k, "v_delta_ref", PeriodicMatrix::identity(1))?;
        }
        let linearised = match (&mode, att.kind) {
            (RefMode::Linearised { ops, taylor_order }, AttachmentKind::Following) => Some((*ops, *taylor_order)),
            _ => None,
        };
        match linearised {
            None => {
                let w = c.add_inputs(Signal::dq(&format!("ref_{}", att.name)));
                c.feed(w, k, "ref", PeriodicMatrix::identity(2))?;
            }
            Some((ops, n)) => {
                let op = ops
                    .get(&att.name)
                    .ok_or_else(|| SystemError::PortMismatch(format!("no operating point for {}", att.name)))?;
                let rs = hsa_cider::reference_small_signal(op, &res.spec.setpoint, n)?;
                let gain = Gain::Custom(Arc::new(rs.gain()));
                let rc = LtpModel::static_gain(format!("ref_{}", att.name), Signal::dq("v"), Signal::dq("ref"), gain)?;
                let r = c.add_child(rc);
                c.connect(g, &g_out, r, "v", PeriodicMatrix::park())?;
                c.connect(r, "ref", k, "ref", PeriodicMatrix::identity(2))?;
            }
        }
    }
    Ok(c.build())
}

/// Grid and resources with the current references as external inputs
/// `ref_<name>` (DQ) next to the source EMF `e`.
pub fn open_system_ltp(sys: &SystemDescription, internal_ops: Option<&OperatingPoints>) -> Result<LtpModel> {
    assemble(sys, RefMode::External, internal_ops)
}

/// Closed loop: grid voltages feed the linearised PQ law of every following
/// resource, whose currents feed back into the grid.
pub fn closed_loop_ltp(sys: &SystemDescription, ops: &OperatingPoints, taylor_order: usize) -> Result<LtpModel> {
    assemble(sys, RefMode::Linearised { ops, taylor_order }, Some(ops))
}

/// Harmonic-domain closed-loop model.
pub fn close_loop(sys: &SystemDescription, ops: &OperatingPoints, limits: &HarmonicLimits, taylor_order: usize) -> Result<HssModel> {
    let ltp = closed_loop_ltp(sys, ops, taylor_order)?;
    Ok(HssModel::from_ltp(&ltp, limits, Provenance::ClosedLoop)?)
}
