use crate::blocks::{hardware_block, port_input_group, port_output_group, software_block, LinearBlock, PHASES};
use crate::error::{CiderError, Result};
use crate::op::OperatingPoint;
use crate::spec::{CiderKind, CiderSpec, StageLabel};
use faer::Mat;
use hsa_harmonic::{
    Composite, Coord, Domain, HarmonicLimits, HssModel, LtpModel, PeriodicMatrix, Provenance, Signal,
};

fn constant(m: &Mat<f64>) -> PeriodicMatrix {
    PeriodicMatrix::constant_real(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Park transform applied to a group: ABC → DQ (2x3).
fn park() -> PeriodicMatrix {
    PeriodicMatrix::park()
}

/// Hardware `A(θ)` and `B(θ)` including the linearised DC-link power balance
/// `C_δ v̇_δ = i_src − G v_δ − Σ u_x i_α,x / v_δ` about the periodic operating point.
fn dc_hardware(spec: &CiderSpec, hw: &LinearBlock, op: &OperatingPoint) -> Result<(PeriodicMatrix, PeriodicMatrix)> {
    let dcop = op
        .dc
        .as_ref()
        .ok_or_else(|| CiderError::MissingOperatingPoint("DC-side resource needs the internal steady state".into()))?;
    let delta = spec.stage(StageLabel::Delta)?.filter;
    let h_op = [dcop.u_abc.index_set().h_max, dcop.i_alpha_abc.index_set().h_max, dcop.v_delta.index_set().h_max]
        .into_iter()
        .max()
        .unwrap();
    let order = (2 * h_op).max(1);
    let n_samples = 8 * order + 32;
    let vd = hw.state("v_delta", Coord::Dc);
    let ia: Vec<usize> = PHASES.iter().map(|&p| hw.state("i_alpha", p)).collect();
    let ui: Vec<usize> = PHASES.iter().map(|&p| hw.input("u", p)).collect();
    let (nx, nu) = (hw.a.nrows(), hw.b.ncols());
    let op_at = |th: f64| {
        let u: Vec<f64> = (0..3).map(|x| dcop.u_abc.eval_angle(x, th).re).collect();
        let i: Vec<f64> = (0..3).map(|x| dcop.i_alpha_abc.eval_angle(x, th).re).collect();
        let v = dcop.v_delta.eval_angle(0, th).re;
        (u, i, v)
    };
    let a = PeriodicMatrix::from_sampler(nx, nx, order, n_samples, |th| {
        let (u, i, v) = op_at(th);
        let mut m = hw.a.clone();
        let p: f64 = u.iter().zip(&i).map(|(a, b)| a * b).sum();
        m[(vd, vd)] = (-delta.loss + p / (v * v)) / delta.value;
        for x in 0..3 {
            m[(vd, ia[x])] = -u[x] / (delta.value * v);
        }
        m
    });
    let b = PeriodicMatrix::from_sampler(nx, nu, order, n_samples, |th| {
        let (_, i, v) = op_at(th);
        let mut m = hw.b.clone();
        for x in 0..3 {
            m[(vd, ui[x])] = -i[x] / (delta.value * v);
        }
        m
    });
    Ok((a, b))
}

/// Internal response of a resource: hardware in ABC, control software in DQ,
/// Park transforms at the boundary and an ideal actuator.
///
/// External inputs: the port quantity (`v_g` for following kinds, `i_g` for
/// forming), the DQ reference `ref`, and for the DC kind `i_src` and
/// `v_delta_ref`. External output: `i_gamma` (following) or `v_phi` (forming).
pub fn build_ltp_model(spec: &CiderSpec, op: Option<&OperatingPoint>) -> Result<LtpModel> {
    let hw = hardware_block(spec)?;
    let sw = software_block(spec)?;
    let kind = spec.kind;
    let port_in = port_input_group(kind);
    let port_out = port_output_group(kind);

    let (a_hw, b_hw) = if kind == CiderKind::GridFollowingDc {
        let op = op.ok_or_else(|| CiderError::MissingOperatingPoint("grid_following_dc".into()))?;
        dc_hardware(spec, &hw, op)?
    } else {
        (constant(&hw.a), constant(&hw.b))
    };
    let hw_model = LtpModel::primitive(
        "hw",
        hw.states.clone(),
        hw.inputs.clone(),
        hw.outputs.clone(),
        a_hw,
        b_hw,
        constant(&hw.c),
        constant(&hw.d),
    )?;
    let sw_model = LtpModel::primitive(
        "sw",
        sw.states.clone(),
        sw.inputs.clone(),
        sw.outputs.clone(),
        constant(&sw.a),
        constant(&sw.b),
        constant(&sw.c),
        constant(&sw.d),
    )?;

    let mut c = Composite::new("cider");
    let h = c.add_child(hw_model);
    let s = c.add_child(sw_model);
    let w_port = c.add_inputs(Signal::abc(port_in));
    let w_ref = c.add_inputs(Signal::dq("ref"));
    let z_port = c.add_outputs(Signal::abc(port_out));
    c.feed(w_port, h, port_in, PeriodicMatrix::identity(3))?;
    c.feed(w_ref, s, "ref", PeriodicMatrix::identity(2))?;
    let mut measured = vec!["i_alpha", "v_phi", port_in];
    if kind != CiderKind::GridForming {
        measured.push("i_gamma");
    }
    for g in measured {
        c.connect(h, g, s, g, park())?;
    }
    c.connect(s, "u", h, "u", PeriodicMatrix::inv_park())?;
    if kind == CiderKind::GridFollowingDc {
        let w_src = c.add_inputs(Signal::dc("i_src", Domain::Hardware));
        let w_vref = c.add_inputs(Signal::dc("v_delta_ref", Domain::Software));
        c.feed(w_src, h, "i_src", PeriodicMatrix::identity(1))?;
        c.feed(w_vref, s, "v_delta_ref", PeriodicMatrix::identity(1))?;
        c.connect(h, "v_delta", s, "v_delta", PeriodicMatrix::identity(1))?;
        c.connect(h, "i_src", s, "i_src", PeriodicMatrix::identity(1))?;
    }
    c.expose(h, port_out, z_port, PeriodicMatrix::identity(3))?;
    Ok(c.build())
}

/// Lifts a time-periodic resource model to the harmonic domain.
pub fn lift_to_hss(ltp: &LtpModel, limits: &HarmonicLimits) -> Result<HssModel> {
    Ok(HssModel::from_ltp(ltp, limits, Provenance::OpenLoopResource)?)
}

/// Number of hardware and software states of a spec.
pub fn state_counts(spec: &CiderSpec) -> Result<(usize, usize)> {
    Ok((hardware_block(spec)?.states.len(), software_block(spec)?.states.len()))
}
