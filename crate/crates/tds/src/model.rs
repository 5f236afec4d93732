//! Nonlinear model of a network with resources: the linear phase-domain grid
//! plus the resource dynamics, coupled through the attachment ports.

use crate::error::{Result, TdsError};
use faer::linalg::solvers::Solve;
use faer::Mat;
use hsa_cider::{CiderDynamics, CiderSpec, ParamPath, StageLabel};
use hsa_grid::{AttachmentKind, GridModel, NetworkTopology, TheveninEquivalent};
use hsa_harmonic::C64;
use hsa_system::SystemDescription;
use std::collections::BTreeMap;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
struct Rows(Vec<Vec<(usize, f64)>>);

impl Rows {
    fn from_blocks(a: &Mat<f64>, b: &Mat<f64>) -> Self {
        let nx = a.ncols();
        Rows(
            (0..a.nrows())
                .map(|i| {
                    let mut r: Vec<(usize, f64)> = (0..nx).filter(|&j| a[(i, j)] != 0.0).map(|j| (j, a[(i, j)])).collect();
                    r.extend((0..b.ncols()).filter(|&j| b[(i, j)] != 0.0).map(|j| (nx + j, b[(i, j)])));
                    r
                })
                .collect(),
        )
    }

    fn apply(&self, z: &[f64], out: &mut [f64]) {
        for (o, r) in out.iter_mut().zip(&self.0) {
            *o = r.iter().map(|&(j, a)| a * z[j]).sum();
        }
    }
}

#[derive(Debug, Clone)]
struct Slot {
    name: String,
    kind: AttachmentKind,
    dynamics: CiderDynamics,
    offset: usize,
    /// Column of the attachment input inside the grid input vector.
    grid_in: usize,
    /// Row of the attachment output inside the grid output vector.
    grid_out: usize,
}

/// Following resource sitting directly behind the source impedance: the
/// source inductor and the resource's grid-side inductor carry the same
/// current, so the port voltage is algebraic.
#[derive(Debug, Clone, Copy)]
struct Series {
    r_te: f64,
    l_te: f64,
    r_g: f64,
    l_g: f64,
}

#[derive(Debug, Clone, Copy)]
enum NodeSource {
    State(usize),
    Forming(usize),
    Series,
}

#[derive(Debug, Clone)]
pub struct SystemDynamics {
    f1: f64,
    source: TheveninEquivalent,
    n_grid: usize,
    grid_dx: Option<Rows>,
    grid_y: Option<Rows>,
    n_grid_in: usize,
    n_grid_out: usize,
    slots: Vec<Slot>,
    series: Option<Series>,
    nodes: BTreeMap<String, NodeSource>,
    state_names: Vec<String>,
    n: usize,
}

/// Scratch values of one right-hand-side evaluation.
#[derive(Debug, Clone, Default)]
pub struct Aux {
    pub emf: [f64; 3],
    /// Port input of each resource (voltage for following, current for forming).
    pub port_in: Vec<[f64; 3]>,
    /// Actuator voltage of each resource.
    pub u: Vec<[f64; 3]>,
    z: Vec<f64>,
    y: Vec<f64>,
}

fn gamma_filter(spec: &CiderSpec) -> Result<(f64, f64)> {
    let f = spec.stage(StageLabel::Gamma)?.filter;
    Ok((f.loss, f.value))
}

fn is_series_case(t: &NetworkTopology) -> Result<bool> {
    let caps = t.node_capacitance()?;
    let src = t.node_index(&t.source_node)?;
    Ok(t.attachments.len() == 1
        && t.branches.is_empty()
        && t.nodes.len() == 1
        && t.attachments[0].kind == AttachmentKind::Following
        && caps[src].0 == 0.0)
}

impl SystemDynamics {
    pub fn new(sys: &SystemDescription) -> Result<Self> {
        sys.validate()?;
        let t = &sys.topology;
        let f1 = t.source.f1;
        if is_series_case(t)? {
            let a = &t.attachments[0];
            let spec = &sys.cider(&a.name)?.spec;
            let (r_te, l_te) = t.source.r_l()?;
            let (r_g, l_g) = gamma_filter(spec)?;
            let dynamics = CiderDynamics::new(spec)?;
            let n = dynamics.n_states();
            let mut nodes = BTreeMap::new();
            nodes.insert(a.node.clone(), NodeSource::Series);
            let state_names = (0..n).map(|k| format!("{}.x{k}", a.name)).collect();
            return Ok(Self {
                f1,
                source: t.source.clone(),
                n_grid: 0,
                grid_dx: None,
                grid_y: None,
                n_grid_in: 0,
                n_grid_out: 0,
                slots: vec![Slot { name: a.name.clone(), kind: a.kind, dynamics, offset: 0, grid_in: 0, grid_out: 0 }],
                series: Some(Series { r_te, l_te, r_g, l_g }),
                nodes,
                state_names,
                n,
            });
        }
        let g = GridModel::build(t)?;
        let n_grid = g.states.len();
        let mut state_names: Vec<String> = g.states.iter().map(|s| format!("grid.{s}")).collect();
        let mut slots = Vec::new();
        let mut offset = n_grid;
        for (ai, a) in t.attachments.iter().enumerate() {
            let spec = &sys.cider(&a.name)?.spec;
            let dynamics = CiderDynamics::new(spec)?;
            let grid_in = g
                .inputs
                .iter()
                .position(|s| s.group == hsa_grid::attachment_ports(a).0)
                .ok_or_else(|| TdsError::Unsupported(format!("no grid input for {}", a.name)))?;
            state_names.extend((0..dynamics.n_states()).map(|k| format!("{}.x{k}", a.name)));
            let n = dynamics.n_states();
            slots.push(Slot { name: a.name.clone(), kind: a.kind, dynamics, offset, grid_in, grid_out: 3 * ai });
            offset += n;
        }
        let mut nodes = BTreeMap::new();
        for n in &t.nodes {
            if let Some(s) = g.node_voltage_state(n) {
                nodes.insert(n.clone(), NodeSource::State(s));
            }
        }
        for (k, a) in t.attachments.iter().enumerate() {
            if a.kind == AttachmentKind::Forming {
                nodes.insert(a.node.clone(), NodeSource::Forming(k));
            }
        }
        Ok(Self {
            f1,
            source: t.source.clone(),
            n_grid,
            grid_dx: Some(Rows::from_blocks(&g.a, &g.b)),
            grid_y: Some(Rows::from_blocks(&g.c, &g.d)),
            n_grid_in: g.inputs.len(),
            n_grid_out: g.outputs.len(),
            slots,
            series: None,
            nodes,
            state_names,
            n: offset,
        })
    }

    pub fn f1(&self) -> f64 {
        self.f1
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn state_name(&self, k: usize) -> &str {
        &self.state_names[k]
    }

    pub fn resource_names(&self) -> Vec<&str> {
        self.slots.iter().map(|s| s.name.as_str()).collect()
    }

    pub fn new_aux(&self) -> Aux {
        Aux {
            emf: [0.0; 3],
            port_in: vec![[0.0; 3]; self.slots.len()],
            u: vec![[0.0; 3]; self.slots.len()],
            z: vec![0.0; self.n_grid + self.n_grid_in],
            y: vec![0.0; self.n_grid_out],
        }
    }

    fn slot(&self, name: &str) -> Result<usize> {
        self.slots
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| TdsError::InvalidConfig(format!("unknown resource {name}")))
    }

    /// Replaces a parameter of one resource; the state layout is unchanged.
    pub fn set_param(&mut self, resource: &str, path: ParamPath, value: f64) -> Result<()> {
        let k = self.slot(resource)?;
        let spec = self.slots[k].dynamics.spec().with_param(path, value)?;
        self.slots[k].dynamics = CiderDynamics::new(&spec)?;
        Ok(())
    }

    pub fn param(&self, resource: &str, path: ParamPath) -> Result<f64> {
        Ok(self.slots[self.slot(resource)?].dynamics.spec().param(path)?)
    }

    fn series_port_voltage(&self, s: &Series, e: [f64; 3], x: &[f64]) -> [f64; 3] {
        let d = &self.slots[0].dynamics;
        let i = d.i_gamma(x).unwrap_or([0.0; 3]);
        let v = d.v_phi(x);
        let l = s.l_g + s.l_te;
        [0, 1, 2].map(|k| (s.l_g * (e[k] - s.r_te * i[k]) + s.l_te * (v[k] + s.r_g * i[k])) / l)
    }

    /// `ẋ = f(t, x)`.
    pub fn rhs(&self, t: f64, x: &[f64], dx: &mut [f64], aux: &mut Aux) {
        let theta = 2.0 * PI * self.f1 * t;
        let e = self.source.emf(theta);
        aux.emf = e;
        if let Some(s) = &self.series {
            let v = self.series_port_voltage(s, e, x);
            aux.port_in[0] = v;
            aux.u[0] = self.slots[0].dynamics.rhs(theta, x, v, dx);
            return;
        }
        let ng = self.n_grid;
        aux.z[..ng].copy_from_slice(&x[..ng]);
        aux.z[ng..ng + 3].copy_from_slice(&e);
        for s in &self.slots {
            let xs = &x[s.offset..s.offset + s.dynamics.n_states()];
            let v = s.dynamics.port_output(xs);
            aux.z[ng + s.grid_in..ng + s.grid_in + 3].copy_from_slice(&v);
        }
        if let (Some(gdx), Some(gy)) = (&self.grid_dx, &self.grid_y) {
            gdx.apply(&aux.z, &mut dx[..ng]);
            gy.apply(&aux.z, &mut aux.y);
        }
        for (k, s) in self.slots.iter().enumerate() {
            let r = s.offset..s.offset + s.dynamics.n_states();
            let p = [aux.y[s.grid_out], aux.y[s.grid_out + 1], aux.y[s.grid_out + 2]];
            aux.port_in[k] = p;
            aux.u[k] = s.dynamics.rhs(theta, &x[r.clone()], p, &mut dx[r]);
        }
    }

    /// Grid in its fundamental sinusoidal steady state with the resources
    /// drawing no current, following resources' capacitors charged to their
    /// port voltage, DC links at their reference.
    pub fn initial_state(&self) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.n];
        for s in &self.slots {
            let x0 = s.dynamics.initial_state();
            x[s.offset..s.offset + x0.len()].copy_from_slice(&x0);
        }
        let vp = self.source.v_peak();
        let ph = [0.0, 2.0 * PI / 3.0, -2.0 * PI / 3.0];
        if self.series.is_some() {
            let d = &self.slots[0].dynamics;
            for (k, i) in d.v_phi_states().into_iter().enumerate() {
                x[i] = vp * (-ph[k]).cos();
            }
            return Ok(x);
        }
        let gdx = self.grid_dx.as_ref().expect("grid present");
        let ng = self.n_grid;
        let w = 2.0 * PI * self.f1;
        // (jω − A) X = B_e E with E the positive-sequence phasor of the EMF.
        let mut m = Mat::<C64>::zeros(ng, ng);
        let mut rhs = Mat::<C64>::zeros(ng, 1);
        for (i, row) in gdx.0.iter().enumerate() {
            m[(i, i)] += C64::new(0.0, w);
            for &(j, a) in row {
                if j < ng {
                    m[(i, j)] -= C64::new(a, 0.0);
                } else if j < ng + 3 {
                    rhs[(i, 0)] += C64::from_polar(a * vp, -ph[j - ng]);
                }
            }
        }
        let sol = m.partial_piv_lu().solve(&rhs);
        for i in 0..ng {
            x[i] = sol[(i, 0)].re;
        }
        let mut aux = self.new_aux();
        let mut dx = vec![0.0; self.n];
        self.rhs(0.0, &x, &mut dx, &mut aux);
        for (k, s) in self.slots.iter().enumerate() {
            if s.kind == AttachmentKind::Following {
                for (c, i) in s.dynamics.v_phi_states().into_iter().enumerate() {
                    x[s.offset + i] = aux.port_in[k][c];
                }
            }
        }
        Ok(x)
    }

    /// Phase voltages of a node.
    pub fn node_voltage(&self, node: &str, x: &[f64], aux: &Aux) -> Option<[f64; 3]> {
        match *self.nodes.get(node)? {
            NodeSource::State(s) => Some([x[s], x[s + 1], x[s + 2]]),
            NodeSource::Forming(k) => {
                let s = &self.slots[k];
                Some(s.dynamics.v_phi(&x[s.offset..]))
            }
            NodeSource::Series => Some(aux.port_in[0]),
        }
    }

    /// Values of one record label (one per phase, or a single value).
    pub fn observe(&self, label: &str, t: f64, x: &[f64], aux: &Aux) -> Result<Vec<f64>> {
        let _ = t;
        if let Some(v) = self.node_voltage(label, x, aux) {
            return Ok(v.to_vec());
        }
        if label == "e" {
            return Ok(aux.emf.to_vec());
        }
        if label == "i_te" {
            if self.series.is_some() {
                let d = &self.slots[0].dynamics;
                return Ok(d.i_gamma(x).unwrap_or([0.0; 3]).to_vec());
            }
            return Ok(x[..3].to_vec());
        }
        let bad = || TdsError::InvalidConfig(format!("unknown record label {label}"));
        let (res, q) = label.split_once('.').ok_or_else(bad)?;
        let k = self.slot(res)?;
        let s = &self.slots[k];
        let xs = &x[s.offset..s.offset + s.dynamics.n_states()];
        let d = &s.dynamics;
        Ok(match q {
            "i_alpha" => d.i_alpha(xs).to_vec(),
            "v_phi" => d.v_phi(xs).to_vec(),
            "i_gamma" => d.i_gamma(xs).ok_or_else(bad)?.to_vec(),
            "u" => aux.u[k].to_vec(),
            "v_delta" => vec![d.v_delta(xs).ok_or_else(bad)?],
            "v_port" => aux.port_in[k].to_vec(),
            "p" => {
                // Power delivered to the grid (the port current is drawn).
                let (v, i) = match s.kind {
                    AttachmentKind::Following => (aux.port_in[k], d.i_gamma(xs).unwrap_or([0.0; 3])),
                    AttachmentKind::Forming => (d.v_phi(xs), aux.port_in[k].map(|c| -c)),
                };
                vec![-(0..3).map(|c| v[c] * i[c]).sum::<f64>()]
            }
            _ => return Err(bad()),
        })
    }

    /// Column names of a record label.
    pub fn observe_names(&self, label: &str, x: &[f64], aux: &Aux) -> Result<Vec<String>> {
        let v = self.observe(label, 0.0, x, aux)?;
        Ok(if v.len() == 3 {
            ["a", "b", "c"].iter().map(|p| format!("{label}.{p}")).collect()
        } else {
            vec![label.to_string()]
        })
    }

    /// State indices grouped by physical quantity (phase triplets, DC link),
    /// hardware only. Used for divergence detection.
    pub fn hardware_groups(&self) -> Vec<Vec<usize>> {
        let mut g: Vec<Vec<usize>> = (0..self.n_grid / 3).map(|k| vec![3 * k, 3 * k + 1, 3 * k + 2]).collect();
        for s in &self.slots {
            let x0 = s.dynamics.initial_state();
            let d = &s.dynamics;
            let mut probe = vec![0.0; x0.len()];
            let mut idx = |f: &dyn Fn(&[f64]) -> Vec<f64>| {
                let mut out = Vec::new();
                for k in 0..probe.len() {
                    probe[k] = 1.0;
                    if f(&probe).iter().any(|&v| v != 0.0) {
                        out.push(s.offset + k);
                    }
                    probe[k] = 0.0;
                }
                out
            };
            g.push(idx(&|x| d.i_alpha(x).to_vec()));
            g.push(idx(&|x| d.v_phi(x).to_vec()));
            if d.i_gamma(&x0).is_some() {
                g.push(idx(&|x| d.i_gamma(x).unwrap().to_vec()));
            }
            if d.v_delta(&x0).is_some() {
                g.push(idx(&|x| vec![d.v_delta(x).unwrap()]));
            }
        }
        g
    }
}
