//! Constant hardware and software blocks of a resource.
//!
//! Hardware (filters) lives in ABC coordinates, control software in DQ. The
//! same matrices feed both the time-periodic model and the nonlinear
//! time-domain dynamics.

use crate::error::Result;
use crate::spec::{CiderKind, CiderSpec, StageLabel};
use faer::Mat;
use hsa_harmonic::{Coord, Domain, Signal};

/// Dense real state-space block with labelled ports.
#[derive(Debug, Clone)]
pub struct LinearBlock {
    pub states: Vec<Signal>,
    pub inputs: Vec<Signal>,
    pub outputs: Vec<Signal>,
    pub a: Mat<f64>,
    pub b: Mat<f64>,
    pub c: Mat<f64>,
    pub d: Mat<f64>,
}

impl LinearBlock {
    fn index(sigs: &[Signal], group: &str, coord: Coord) -> usize {
        sigs.iter()
            .position(|s| s.group == group && s.coord == coord)
            .unwrap_or_else(|| panic!("no signal {group}.{coord}"))
    }

    pub fn state(&self, group: &str, coord: Coord) -> usize {
        Self::index(&self.states, group, coord)
    }

    pub fn input(&self, group: &str, coord: Coord) -> usize {
        Self::index(&self.inputs, group, coord)
    }

    pub fn output(&self, group: &str, coord: Coord) -> usize {
        Self::index(&self.outputs, group, coord)
    }

    pub fn has_input(&self, group: &str) -> bool {
        self.inputs.iter().any(|s| s.group == group)
    }

    pub fn has_state(&self, group: &str) -> bool {
        self.states.iter().any(|s| s.group == group)
    }
}

pub const PHASES: [Coord; 3] = [Coord::A, Coord::B, Coord::C];
pub const AXES: [Coord; 2] = [Coord::D, Coord::Q];

/// Port group names at the resource boundary.
pub fn port_input_group(kind: CiderKind) -> &'static str {
    match kind {
        CiderKind::GridForming => "i_g",
        _ => "v_g",
    }
}

pub fn port_output_group(kind: CiderKind) -> &'static str {
    match kind {
        CiderKind::GridForming => "v_phi",
        _ => "i_gamma",
    }
}

/// Hardware block. States in stage order: `v_delta` (DC only), `i_alpha`,
/// `v_phi`, `i_gamma` (following only). The DC-link row only carries the
/// operating-point independent terms here.
pub fn hardware_block(spec: &CiderSpec) -> Result<LinearBlock> {
    spec.validate()?;
    let kind = spec.kind;
    let dc = kind == CiderKind::GridFollowingDc;
    let following = kind != CiderKind::GridForming;
    let port = port_input_group(kind);

    let mut states = Vec::new();
    if dc {
        states.extend(Signal::dc("v_delta", Domain::Hardware));
    }
    states.extend(Signal::abc("i_alpha"));
    states.extend(Signal::abc("v_phi"));
    if following {
        states.extend(Signal::abc("i_gamma"));
    }
    let mut inputs = Signal::abc("u");
    inputs.extend(Signal::abc(port));
    if dc {
        inputs.extend(Signal::dc("i_src", Domain::Hardware));
    }
    let mut outputs = Signal::abc("i_alpha");
    outputs.extend(Signal::abc("v_phi"));
    if following {
        outputs.extend(Signal::abc("i_gamma"));
    }
    outputs.extend(Signal::abc(port));
    if dc {
        outputs.extend(Signal::dc("v_delta", Domain::Hardware));
        outputs.extend(Signal::dc("i_src", Domain::Hardware));
    }

    let (nx, nu, ny) = (states.len(), inputs.len(), outputs.len());
    let mut blk = LinearBlock {
        states,
        inputs,
        outputs,
        a: Mat::zeros(nx, nx),
        b: Mat::zeros(nx, nu),
        c: Mat::zeros(ny, nx),
        d: Mat::zeros(ny, nu),
    };
    let alpha = spec.stage(StageLabel::Alpha)?.filter;
    let phi = spec.stage(StageLabel::Phi)?.filter;
    for p in PHASES {
        let ia = blk.state("i_alpha", p);
        let vp = blk.state("v_phi", p);
        let u = blk.input("u", p);
        // L_α di_α/dt = u − R_α i_α − v_φ
        blk.a[(ia, ia)] = -alpha.loss / alpha.value;
        blk.a[(ia, vp)] = -1.0 / alpha.value;
        blk.b[(ia, u)] = 1.0 / alpha.value;
        // C_φ dv_φ/dt = i_α + i_grid − G_φ v_φ
        blk.a[(vp, vp)] = -phi.loss / phi.value;
        blk.a[(vp, ia)] = 1.0 / phi.value;
        if following {
            let gamma = spec.stage(StageLabel::Gamma)?.filter;
            let ig = blk.state("i_gamma", p);
            blk.a[(vp, ig)] = 1.0 / phi.value;
            // L_γ di_γ/dt = v_g − R_γ i_γ − v_φ
            blk.a[(ig, ig)] = -gamma.loss / gamma.value;
            blk.a[(ig, vp)] = -1.0 / gamma.value;
            let i = blk.input("v_g", p);
            blk.b[(ig, i)] = 1.0 / gamma.value;
            let o = blk.output("i_gamma", p);
            blk.c[(o, ig)] = 1.0;
        } else {
            let i = blk.input("i_g", p);
            blk.b[(vp, i)] = 1.0 / phi.value;
        }
        let o = blk.output("i_alpha", p);
        blk.c[(o, ia)] = 1.0;
        let o = blk.output("v_phi", p);
        blk.c[(o, vp)] = 1.0;
        let (o, i) = (blk.output(port, p), blk.input(port, p));
        blk.d[(o, i)] = 1.0;
    }
    if dc {
        let delta = spec.stage(StageLabel::Delta)?.filter;
        let vd = blk.state("v_delta", Coord::Dc);
        blk.a[(vd, vd)] = -delta.loss / delta.value;
        let i = blk.input("i_src", Coord::Dc);
        blk.b[(vd, i)] = 1.0 / delta.value;
        let o = blk.output("v_delta", Coord::Dc);
        blk.c[(o, vd)] = 1.0;
        let (o, i) = (blk.output("i_src", Coord::Dc), blk.input("i_src", Coord::Dc));
        blk.d[(o, i)] = 1.0;
    }
    Ok(blk)
}

/// Linear expression over `[states, inputs]` of the software block.
#[derive(Clone)]
struct Lin(Vec<f64>);

impl Lin {
    fn zero(n: usize) -> Self {
        Lin(vec![0.0; n])
    }
    fn unit(n: usize, k: usize) -> Self {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        Lin(v)
    }
    fn add(&self, o: &Lin, s: f64) -> Lin {
        Lin(self.0.iter().zip(&o.0).map(|(a, b)| a + s * b).collect())
    }
    fn scale(&self, s: f64) -> Lin {
        Lin(self.0.iter().map(|a| a * s).collect())
    }
}

/// Control software block. States in stage order: `x_delta` (DC only),
/// `x_alpha`, `x_phi`, `x_gamma` (following only). Inputs are the DQ
/// measurements, the reference `ref`, and for the DC kind the DC-link
/// measurements plus `v_delta_ref`. Output: actuator reference `u` (DQ).
pub fn software_block(spec: &CiderSpec) -> Result<LinearBlock> {
    spec.validate()?;
    let kind = spec.kind;
    let dc = kind == CiderKind::GridFollowingDc;
    let following = kind != CiderKind::GridForming;

    let mut states = Vec::new();
    if dc {
        states.extend(Signal::dc("x_delta", Domain::Software));
    }
    states.extend(Signal::dq("x_alpha"));
    states.extend(Signal::dq("x_phi"));
    if following {
        states.extend(Signal::dq("x_gamma"));
    }
    let mut inputs = Signal::dq("i_alpha");
    inputs.extend(Signal::dq("v_phi"));
    if following {
        inputs.extend(Signal::dq("i_gamma"));
        inputs.extend(Signal::dq("v_g"));
    } else {
        inputs.extend(Signal::dq("i_g"));
    }
    if dc {
        inputs.extend(Signal::dc("v_delta", Domain::Software));
        inputs.extend(Signal::dc("i_src", Domain::Software));
    }
    inputs.extend(Signal::dq("ref"));
    if dc {
        inputs.extend(Signal::dc("v_delta_ref", Domain::Software));
    }
    let outputs = Signal::dq("u");

    let (nx, nu) = (states.len(), inputs.len());
    let n = nx + nu;
    let st = |g: &str, c: Coord| Lin::unit(n, LinearBlock::index(&states, g, c));
    let inp = |g: &str, c: Coord| Lin::unit(n, nx + LinearBlock::index(&inputs, g, c));

    let ctl = |l: StageLabel| spec.stage(l).map(|s| s.controller);
    let ca = ctl(StageLabel::Alpha)?;
    let cp = ctl(StageLabel::Phi)?;

    let mut xdot: Vec<(usize, Lin)> = Vec::new();
    let mut out: Vec<Lin> = Vec::new();

    // Outer DC-voltage loop, added to the d-axis current reference.
    let mut delta_offset = Lin::zero(n);
    if dc {
        let cd = ctl(StageLabel::Delta)?;
        let e = inp("v_delta_ref", Coord::Dc).add(&inp("v_delta", Coord::Dc), -1.0);
        xdot.push((LinearBlock::index(&states, "x_delta", Coord::Dc), e.clone()));
        delta_offset = e
            .add(&st("x_delta", Coord::Dc), 1.0 / cd.t_fb)
            .scale(cd.k_fb)
            .add(&inp("i_src", Coord::Dc), -cd.k_ft);
    }

    for (ax, &c) in AXES.iter().enumerate() {
        let i_alpha_ref = if following {
            let cg = ctl(StageLabel::Gamma)?;
            let mut r = inp("ref", c);
            if ax == 0 {
                r = r.add(&delta_offset, 1.0);
            }
            // Load-convention grid current: raising v_φ lowers i_γ.
            let e_g = inp("i_gamma", c).add(&r, -1.0);
            xdot.push((LinearBlock::index(&states, "x_gamma", c), e_g.clone()));
            let v_phi_ref = e_g
                .add(&st("x_gamma", c), 1.0 / cg.t_fb)
                .scale(cg.k_fb)
                .add(&inp("v_g", c), cg.k_ft);
            let e_p = v_phi_ref.add(&inp("v_phi", c), -1.0);
            xdot.push((LinearBlock::index(&states, "x_phi", c), e_p.clone()));
            e_p.add(&st("x_phi", c), 1.0 / cp.t_fb).scale(cp.k_fb).add(&inp("i_gamma", c), -cp.k_ft)
        } else {
            let e_p = inp("ref", c).add(&inp("v_phi", c), -1.0);
            xdot.push((LinearBlock::index(&states, "x_phi", c), e_p.clone()));
            e_p.add(&st("x_phi", c), 1.0 / cp.t_fb).scale(cp.k_fb).add(&inp("i_g", c), -cp.k_ft)
        };
        let e_a = i_alpha_ref.add(&inp("i_alpha", c), -1.0);
        xdot.push((LinearBlock::index(&states, "x_alpha", c), e_a.clone()));
        out.push(e_a.add(&st("x_alpha", c), 1.0 / ca.t_fb).scale(ca.k_fb).add(&inp("v_phi", c), ca.k_ft));
    }

    let mut a = Mat::zeros(nx, nx);
    let mut b = Mat::zeros(nx, nu);
    for (row, l) in &xdot {
        for j in 0..nx {
            a[(*row, j)] = l.0[j];
        }
        for j in 0..nu {
            b[(*row, j)] = l.0[nx + j];
        }
    }
    let ny = outputs.len();
    let mut cm = Mat::zeros(ny, nx);
    let mut dm = Mat::zeros(ny, nu);
    for (row, l) in out.iter().enumerate() {
        for j in 0..nx {
            cm[(row, j)] = l.0[j];
        }
        for j in 0..nu {
            dm[(row, j)] = l.0[nx + j];
        }
    }
    Ok(LinearBlock { states, inputs, outputs, a, b, c: cm, d: dm })
}

/// Innermost control stage state group; its integrators host the
/// truncation artefacts.
pub const INNERMOST_STATE: &str = "x_alpha";

/// Stage label of a state group, for reports.
pub fn stage_of_group(group: &str) -> Option<StageLabel> {
    let tail = group.rsplit('.').next().unwrap_or(group);
    let key = tail.trim_start_matches("x_").trim_start_matches("i_").trim_start_matches("v_");
    StageLabel::parse(key)
}
