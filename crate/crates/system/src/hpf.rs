use crate::assemble::{open_system_ltp, OperatingPoints};
use crate::description::SystemDescription;
use crate::error::{Result, SystemError};
use faer::linalg::solvers::Solve;
use faer::Mat;
use hsa_cider::{CiderKind, OpSource, OperatingPoint, Setpoint};
use hsa_grid::AttachmentKind;
use hsa_harmonic::{Coord, HarmonicIndexSet, HarmonicLimits, HarmonicSpectrum, HssModel, Provenance, C64};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{PI, SQRT_2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HpfMode {
    WithHarmonics,
    /// Source harmonics suppressed: a fundamental-frequency power flow.
    ZeroDistortion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HpfOptions {
    /// Largest change of any nodal harmonic between iterations, p.u.
    pub tol: f64,
    pub max_iter: usize,
    /// Relaxation used when the plain iteration fails.
    pub damping: f64,
}

impl Default for HpfOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 100, damping: 0.7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub iterations: usize,
    pub residuals: Vec<f64>,
    /// Relaxation factor of the successful run (1 = plain iteration).
    pub relaxation: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct SystemOperatingPoint {
    pub limits: HarmonicLimits,
    /// Peak of the nominal phase voltage (1 p.u.).
    pub v_base: f64,
    /// Phase voltages of every node (ABC, hardware range).
    pub node_voltages: BTreeMap<String, HarmonicSpectrum>,
    /// Current drawn by each following resource (ABC).
    pub attachment_currents: BTreeMap<String, HarmonicSpectrum>,
    /// Current references of the following resources (DQ, software range).
    pub references: BTreeMap<String, HarmonicSpectrum>,
    pub report: ConvergenceReport,
    /// Nodes whose fundamental is not within 10 % of 1 p.u.
    pub flags: Vec<String>,
}

/// DQ spectrum (2 channels) of an ABC spectrum, computed on samples.
pub fn dq_spectrum(abc: &HarmonicSpectrum, idx: HarmonicIndexSet) -> Result<HarmonicSpectrum> {
    let n = 8 * (idx.h_max.max(abc.index_set().h_max) + 2);
    let ph = [0.0, 2.0 * PI / 3.0, -2.0 * PI / 3.0];
    let s: Vec<Vec<f64>> = (0..3).map(|x| abc.sample(x, n)).collect();
    let mut d = vec![0.0; n];
    let mut q = vec![0.0; n];
    for k in 0..n {
        let th = 2.0 * PI * k as f64 / n as f64;
        for x in 0..3 {
            d[k] += 2.0 / 3.0 * (th - ph[x]).cos() * s[x][k];
            q[k] -= 2.0 / 3.0 * (th - ph[x]).sin() * s[x][k];
        }
    }
    Ok(HarmonicSpectrum::from_samples(idx, &[d, q])?)
}

/// Spectrum of the PQ-law reference `(P, Q)/v_D(t)` on `idx`.
pub fn reference_spectrum(v_dq: &HarmonicSpectrum, p: f64, q: f64, idx: HarmonicIndexSet) -> Result<HarmonicSpectrum> {
    let n = 16 * (idx.h_max + 2);
    let vd = v_dq.sample(0, n);
    if vd.iter().any(|v| v.abs() < 1e-9) {
        return Err(SystemError::Cider(hsa_cider::CiderError::SingularOperatingPoint("v_D crosses zero".into())));
    }
    let a: Vec<f64> = vd.iter().map(|v| p / v).collect();
    let b: Vec<f64> = vd.iter().map(|v| q / v).collect();
    Ok(HarmonicSpectrum::from_samples(idx, &[a, b])?)
}

struct Layout {
    inputs: HashMap<(String, Coord, i32), usize>,
    states: HashMap<(String, Coord, i32), usize>,
}

impl Layout {
    fn new(h: &HssModel) -> Self {
        let key = |l: &hsa_harmonic::LiftedLabel| (l.signal.group.clone(), l.signal.coord, l.order);
        Self {
            inputs: h.inputs.iter().enumerate().map(|(i, l)| (key(l), i)).collect(),
            states: h.states.iter().enumerate().map(|(i, l)| (key(l), i)).collect(),
        }
    }

    fn put(&self, u: &mut [C64], group: &str, coords: &[Coord], s: &HarmonicSpectrum) {
        for (ch, c) in coords.iter().enumerate() {
            for h in s.index_set().orders() {
                if let Some(&i) = self.inputs.get(&(group.to_string(), *c, h)) {
                    u[i] = s.get(ch, h);
                }
            }
        }
    }

    fn get(&self, x: &Mat<C64>, group: &str, coords: &[Coord], idx: HarmonicIndexSet) -> Option<HarmonicSpectrum> {
        let mut s = HarmonicSpectrum::zeros(idx, coords.len());
        for (ch, c) in coords.iter().enumerate() {
            for h in idx.orders() {
                let i = *self.states.get(&(group.to_string(), *c, h))?;
                s.set(ch, h, x[(i, 0)]);
            }
        }
        Some(s)
    }
}

const ABC: [Coord; 3] = [Coord::A, Coord::B, Coord::C];
const DQ: [Coord; 2] = [Coord::D, Coord::Q];

/// Node whose voltage the resource `name` sees, and the state group holding it.
fn voltage_group(sys: &SystemDescription, node: &str) -> String {
    match sys.topology.attachments.iter().find(|a| a.node == node && a.kind == AttachmentKind::Forming) {
        Some(a) => format!("{}.hw.v_phi", a.name),
        None => format!("grid.v_{node}"),
    }
}

/// Fixed-point harmonic power flow: the linear periodic response of grid
/// and resource internals is solved for given references, then every
/// following resource's reference is re-evaluated from the PQ law on the
/// new nodal voltage, until the nodal spectra stop changing.
pub fn harmonic_power_flow(
    sys: &SystemDescription,
    limits: &HarmonicLimits,
    mode: HpfMode,
    opts: &HpfOptions,
) -> Result<SystemOperatingPoint> {
    if sys.ciders.iter().any(|c| c.spec.kind == CiderKind::GridFollowingDc) {
        return Err(SystemError::Unsupported("the power flow handles AC-side resources only".into()));
    }
    let ltp = open_system_ltp(sys, None)?;
    let hss = HssModel::from_ltp(&ltp, limits, Provenance::OpenLoopGrid)?;
    let lu = hss.a_tilde.partial_piv_lu();
    let layout = Layout::new(&hss);
    let (idx_abc, idx_dq) = (limits.abc(), limits.dqz());
    let source = match mode {
        HpfMode::WithHarmonics => sys.topology.source.clone(),
        HpfMode::ZeroDistortion => sys.topology.source.without_harmonics(),
    };
    let v_base = SQRT_2 * source.v_n;
    let emf = source.emf_spectrum(idx_abc);

    let mut refs0 = BTreeMap::new();
    for c in &sys.ciders {
        let r = match c.spec.setpoint {
            Setpoint::Forming { v_sigma, .. } => (SQRT_2 * v_sigma, 0.0),
            _ => {
                let (p, q) = c.spec.setpoint.pq().expect("following setpoint");
                (p / v_base, q / v_base)
            }
        };
        let mut s = HarmonicSpectrum::zeros(idx_dq, 2);
        s.set(0, 0, C64::new(r.0, 0.0));
        s.set(1, 0, C64::new(r.1, 0.0));
        refs0.insert(c.name.clone(), s);
    }

    let solve = |refs: &BTreeMap<String, HarmonicSpectrum>| -> Result<Mat<C64>> {
        let mut u = vec![C64::new(0.0, 0.0); hss.b_hat.ncols()];
        layout.put(&mut u, "e", &ABC, &emf);
        for (name, r) in refs {
            layout.put(&mut u, &format!("ref_{name}"), &DQ, r);
        }
        let u = Mat::from_fn(u.len(), 1, |i, _| u[i]);
        let x = lu.solve(&(&hss.b_hat * &u));
        let x = Mat::from_fn(x.nrows(), 1, |i, _| -x[(i, 0)]);
        if (0..x.nrows()).any(|i| !x[(i, 0)].re.is_finite() || !x[(i, 0)].im.is_finite()) {
            return Err(SystemError::Singular);
        }
        Ok(x)
    };
    let nodes = |x: &Mat<C64>| -> Result<BTreeMap<String, HarmonicSpectrum>> {
        sys.topology
            .nodes
            .iter()
            .map(|n| {
                let g = voltage_group(sys, n);
                let s = layout.get(x, &g, &ABC, idx_abc).ok_or_else(|| SystemError::PortMismatch(format!("no voltage state {g}")))?;
                Ok((n.clone(), s))
            })
            .collect()
    };

    let run = |alpha: f64| -> Result<(BTreeMap<String, HarmonicSpectrum>, Mat<C64>, ConvergenceReport)> {
        let mut refs = refs0.clone();
        let mut prev: Option<BTreeMap<String, HarmonicSpectrum>> = None;
        let mut residuals = Vec::new();
        for it in 0..opts.max_iter {
            let x = solve(&refs)?;
            let volts = nodes(&x)?;
            if let Some(p) = &prev {
                let mut r = 0.0f64;
                for (k, v) in &volts {
                    r = r.max(v.max_abs_diff(&p[k])? / v_base);
                }
                residuals.push(r);
                if !r.is_finite() || r > 1e3 {
                    break;
                }
                if r < opts.tol {
                    let report = ConvergenceReport { iterations: it + 1, residuals, relaxation: alpha, converged: true };
                    return Ok((refs, x, report));
                }
            }
            for c in &sys.ciders {
                let Some((p, q)) = c.spec.setpoint.pq() else { continue };
                let node = &sys.topology.attachment(&c.name)?.node;
                let vdq = dq_spectrum(&volts[node], idx_dq)?;
                let new = reference_spectrum(&vdq, p, q, idx_dq)?;
                let old = &refs[&c.name];
                let upd = HarmonicSpectrum::from_fn(idx_dq, 2, |ch, h| old.get(ch, h) + (new.get(ch, h) - old.get(ch, h)) * alpha);
                refs.insert(c.name.clone(), upd);
            }
            prev = Some(volts);
        }
        Err(SystemError::NonConvergence { iterations: residuals.len() + 1, residuals })
    };

    let (refs, x, report) = match run(1.0) {
        Ok(r) => r,
        Err(SystemError::NonConvergence { .. }) => run(opts.damping)?,
        Err(e) => return Err(e),
    };
    let node_voltages = nodes(&x)?;
    let mut attachment_currents = BTreeMap::new();
    for a in &sys.topology.attachments {
        if a.kind == AttachmentKind::Following {
            if let Some(s) = layout.get(&x, &format!("{}.hw.i_gamma", a.name), &ABC, idx_abc) {
                attachment_currents.insert(a.name.clone(), s);
            }
        }
    }
    let flags = node_voltages
        .iter()
        .filter(|(_, v)| {
            let m = 2.0 * v.get(0, 1).norm() / v_base;
            !(0.9..=1.1).contains(&m)
        })
        .map(|(n, _)| n.clone())
        .collect();
    Ok(SystemOperatingPoint {
        limits: *limits,
        v_base,
        node_voltages,
        attachment_currents,
        references: refs,
        report,
        flags,
    })
}

impl SystemOperatingPoint {
    /// Magnitude of harmonic `h` of phase `x` at `node` in p.u. of the
    /// nominal peak (`2|X_h|/V_base` for `h > 0`).
    pub fn voltage_pu(&self, node: &str, x: usize, h: i32) -> Option<f64> {
        let v = self.node_voltages.get(node)?;
        let m = v.get(x, h).norm() / self.v_base;
        Some(if h == 0 { m } else { 2.0 * m })
    }

    /// Grid-voltage operating point of every following resource.
    pub fn cider_ops(&self, sys: &SystemDescription) -> Result<OperatingPoints> {
        let mut out = BTreeMap::new();
        for a in &sys.topology.attachments {
            if a.kind != AttachmentKind::Following {
                continue;
            }
            let v = &self.node_voltages[&a.node];
            let vdq = dq_spectrum(v, self.limits.dqz())?;
            out.insert(a.name.clone(), OperatingPoint { v_gamma_dq: vdq, source: OpSource::Hpf, dc: None });
        }
        Ok(out)
    }
}
