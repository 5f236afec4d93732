//! Nonlinear time-domain model of a resource.
//!
//! Hardware and software reuse the constant blocks; the Park transforms are
//! evaluated at `θ = ω t`, the PQ law divides by the instantaneous D-axis
//! voltage and the DC link uses the exact power balance.

use crate::blocks::{hardware_block, port_input_group, software_block, LinearBlock, PHASES};
use crate::error::Result;
use crate::reference::reference_law;
use crate::spec::{CiderKind, CiderSpec, Setpoint, StageLabel};
use hsa_harmonic::Coord;
use std::f64::consts::{PI, SQRT_2};

#[derive(Debug, Clone)]
struct SparseRows {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    /// Rows of `[A | B]` over the concatenated vector `[x, u]`.
    fn from_block(a: &faer::Mat<f64>, b: &faer::Mat<f64>) -> Self {
        let nx = a.ncols();
        let rows = (0..a.nrows())
            .map(|i| {
                let mut r = Vec::new();
                for j in 0..nx {
                    if a[(i, j)] != 0.0 {
                        r.push((j, a[(i, j)]));
                    }
                }
                for j in 0..b.ncols() {
                    if b[(i, j)] != 0.0 {
                        r.push((nx + j, b[(i, j)]));
                    }
                }
                r
            })
            .collect();
        Self { rows }
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (o, r) in out.iter_mut().zip(&self.rows) {
            *o = r.iter().map(|&(j, a)| a * v[j]).sum();
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum SwIn {
    Meas(usize, usize),
    VDelta,
    ISrc,
    Ref(usize),
    VDeltaRef,
}


#[derive(Debug, Clone)]
pub struct CiderDynamics {
    spec: CiderSpec,
    n_hw: usize,
    n_sw: usize,
    hw: SparseRows,
    sw: SparseRows,
    sw_out: SparseRows,
    hw_n_in: usize,
    sw_n_in: usize,
    meas_idx: [[usize; 3]; 3],
    has_gamma: bool,
    v_delta: Option<usize>,
    hw_u: [usize; 3],
    hw_port: [usize; 3],
    hw_isrc: Option<usize>,
    sw_plan: Vec<SwIn>,
    c_delta: f64,
    g_delta: f64,
    /// DC source current (DC kind only).
    pub i_src: f64,
}

fn park(theta: f64, abc: [f64; 3]) -> [f64; 2] {
    let ph = [0.0, 2.0 * PI / 3.0, -2.0 * PI / 3.0];
    let mut d = 0.0;
    let mut q = 0.0;
    for x in 0..3 {
        d += (theta - ph[x]).cos() * abc[x];
        q -= (theta - ph[x]).sin() * abc[x];
    }
    [2.0 / 3.0 * d, 2.0 / 3.0 * q]
}

fn inv_park(theta: f64, dq: [f64; 2]) -> [f64; 3] {
    let ph = [0.0, 2.0 * PI / 3.0, -2.0 * PI / 3.0];
    let mut out = [0.0; 3];
    for x in 0..3 {
        out[x] = dq[0] * (theta - ph[x]).cos() - dq[1] * (theta - ph[x]).sin();
    }
    out
}

impl CiderDynamics {
    pub fn new(spec: &CiderSpec) -> Result<Self> {
        let hw = hardware_block(spec)?;
        let sw = software_block(spec)?;
        let dc = spec.kind == CiderKind::GridFollowingDc;
        let port = port_input_group(spec.kind);
        let idx3 = |b: &LinearBlock, g: &str| -> [usize; 3] { [0, 1, 2].map(|k| b.state(g, PHASES[k])) };
        let has_gamma = hw.has_state("i_gamma");
        let meas_idx = [idx3(&hw, "i_alpha"), idx3(&hw, "v_phi"), if has_gamma { idx3(&hw, "i_gamma") } else { [0; 3] }];
        let sw_plan = sw
            .inputs
            .iter()
            .map(|s| {
                let axis = if s.coord == Coord::Q { 1 } else { 0 };
                match s.group.as_str() {
                    "i_alpha" => SwIn::Meas(0, axis),
                    "v_phi" => SwIn::Meas(1, axis),
                    "i_gamma" => SwIn::Meas(2, axis),
                    "v_g" | "i_g" => SwIn::Meas(3, axis),
                    "v_delta" => SwIn::VDelta,
                    "i_src" => SwIn::ISrc,
                    "ref" => SwIn::Ref(axis),
                    "v_delta_ref" => SwIn::VDeltaRef,
                    g => unreachable!("unexpected software input {g}"),
                }
            })
            .collect();
        let (c_delta, g_delta, i_src) = if dc {
            let f = spec.stage(StageLabel::Delta)?.filter;
            let (p, _) = spec.setpoint.pq().unwrap_or((0.0, 0.0));
            let vref = match spec.setpoint {
                Setpoint::FollowingDc { v_delta_ref, .. } => v_delta_ref,
                _ => 1.0,
            };
            (f.value, f.loss, -1.5 * p / vref)
        } else {
            (1.0, 0.0, 0.0)
        };
        Ok(Self {
            spec: spec.clone(),
            n_hw: hw.states.len(),
            n_sw: sw.states.len(),
            hw: SparseRows::from_block(&hw.a, &hw.b),
            sw: SparseRows::from_block(&sw.a, &sw.b),
            sw_out: SparseRows::from_block(&sw.c, &sw.d),
            hw_n_in: hw.inputs.len(),
            sw_n_in: sw.inputs.len(),
            meas_idx,
            has_gamma,
            v_delta: dc.then(|| hw.state("v_delta", Coord::Dc)),
            hw_u: [0, 1, 2].map(|k| hw.input("u", PHASES[k])),
            hw_port: [0, 1, 2].map(|k| hw.input(port, PHASES[k])),
            hw_isrc: dc.then(|| hw.input("i_src", Coord::Dc)),
            sw_plan,
            c_delta,
            g_delta,
            i_src,
        })
    }

    pub fn spec(&self) -> &CiderSpec {
        &self.spec
    }

    /// Hardware states first, then software states (same order as the LTP model).
    pub fn n_states(&self) -> usize {
        self.n_hw + self.n_sw
    }

    pub fn n_hardware(&self) -> usize {
        self.n_hw
    }

    /// Port output: `i_γ` (following, load convention) or `v_φ` (forming).
    pub fn port_output(&self, x: &[f64]) -> [f64; 3] {
        let g = if self.has_gamma { 2 } else { 1 };
        self.meas_idx[g].map(|i| x[i])
    }

    pub fn i_alpha(&self, x: &[f64]) -> [f64; 3] {
        self.meas_idx[0].map(|i| x[i])
    }

    pub fn v_phi(&self, x: &[f64]) -> [f64; 3] {
        self.meas_idx[1].map(|i| x[i])
    }

    pub fn i_gamma(&self, x: &[f64]) -> Option<[f64; 3]> {
        self.has_gamma.then(|| self.meas_idx[2].map(|i| x[i]))
    }

    pub fn v_delta(&self, x: &[f64]) -> Option<f64> {
        self.v_delta.map(|i| x[i])
    }

    /// Index of the `v_φ` states, to seed a simulation.
    pub fn v_phi_states(&self) -> [usize; 3] {
        self.meas_idx[1]
    }

    /// Initial state: DC link charged to its reference, everything else zero.
    pub fn initial_state(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n_states()];
        if let (Some(i), Setpoint::FollowingDc { v_delta_ref, .. }) = (self.v_delta, self.spec.setpoint) {
            x[i] = v_delta_ref;
        }
        x
    }

    /// Evaluates `ẋ` given the port input (grid voltage for following kinds,
    /// port current for forming). Returns the actuator voltage.
    pub fn rhs(&self, theta: f64, x: &[f64], port_in: [f64; 3], dx: &mut [f64]) -> [f64; 3] {
        let (xh, xs) = x.split_at(self.n_hw);
        let mut meas = [[0.0; 2]; 4];
        for g in 0..3 {
            if g == 2 && !self.has_gamma {
                continue;
            }
            meas[g] = park(theta, self.meas_idx[g].map(|i| xh[i]));
        }
        meas[3] = park(theta, port_in);
        let (reference, v_ref) = match self.spec.setpoint {
            Setpoint::Forming { v_sigma, .. } => ([SQRT_2 * v_sigma, 0.0], 0.0),
            Setpoint::Following { p_sigma, q_sigma } => {
                let (a, b) = reference_law(p_sigma, q_sigma, meas[3][0]);
                ([a, b], 0.0)
            }
            Setpoint::FollowingDc { p_sigma, q_sigma, v_delta_ref } => {
                let (a, b) = reference_law(p_sigma, q_sigma, meas[3][0]);
                ([a, b], v_delta_ref)
            }
        };
        let v_delta = self.v_delta.map(|i| xh[i]).unwrap_or(0.0);

        let mut zs = [0.0f64; 24];
        let zs = &mut zs[..self.n_sw + self.sw_n_in];
        zs[..self.n_sw].copy_from_slice(xs);
        for (k, p) in self.sw_plan.iter().enumerate() {
            zs[self.n_sw + k] = match *p {
                SwIn::Meas(g, a) => meas[g][a],
                SwIn::VDelta => v_delta,
                SwIn::ISrc => self.i_src,
                SwIn::Ref(a) => reference[a],
                SwIn::VDeltaRef => v_ref,
            };
        }
        let (dxh, dxs) = dx.split_at_mut(self.n_hw);
        self.sw.apply(zs, dxs);
        let mut u_dq = [0.0; 2];
        self.sw_out.apply(zs, &mut u_dq);
        let u = inv_park(theta, u_dq);

        let mut zh = [0.0f64; 24];
        let zh = &mut zh[..self.n_hw + self.hw_n_in];
        zh[..self.n_hw].copy_from_slice(xh);
        for k in 0..3 {
            zh[self.n_hw + self.hw_u[k]] = u[k];
            zh[self.n_hw + self.hw_port[k]] = port_in[k];
        }
        if let Some(i) = self.hw_isrc {
            zh[self.n_hw + i] = self.i_src;
        }
        self.hw.apply(zh, dxh);
        if let Some(vd) = self.v_delta {
            let p: f64 = (0..3).map(|k| u[k] * xh[self.meas_idx[0][k]]).sum();
            dxh[vd] = (self.i_src - self.g_delta * v_delta - p / v_delta) / self.c_delta;
        }
        u
    }
}

