use crate::error::{HarmonicError, Result};
use crate::index::HarmonicLimits;
use crate::periodic::{Gain, PeriodicMatrix};
use crate::signal::Signal;
use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64 as C64;

/// Where a model is realized: pointwise in time or lifted to the harmonic domain.
#[derive(Debug, Clone, Copy)]
pub enum Context<'a> {
    /// Time-domain value at angle `θ = ω t`.
    Time(f64),
    Harmonic(&'a HarmonicLimits),
}

impl Context<'_> {
    fn dim(&self, s: &Signal) -> usize {
        match self {
            Context::Time(_) => 1,
            Context::Harmonic(l) => 2 * l.range(s.domain) + 1,
        }
    }

    fn ranges(&self, signals: &[Signal]) -> Vec<usize> {
        match self {
            Context::Time(_) => vec![0; signals.len()],
            Context::Harmonic(l) => signals.iter().map(|s| l.range(s.domain)).collect(),
        }
    }

    pub fn realize_gain(&self, g: &Gain, rows: &[Signal], cols: &[Signal]) -> Result<Mat<C64>> {
        let (r, c) = g.shape();
        if r != rows.len() || c != cols.len() {
            return Err(HarmonicError::Dimension(format!(
                "gain is {r}x{c} but connects {} to {} signals",
                cols.len(),
                rows.len()
            )));
        }
        match self {
            Context::Time(theta) => Ok(g.eval(*theta)),
            Context::Harmonic(_) => g.lift(&self.ranges(rows), &self.ranges(cols)),
        }
    }
}

/// State-space quadruple realized in one context.
#[derive(Debug, Clone)]
pub struct Realization {
    pub a: Mat<C64>,
    pub b: Mat<C64>,
    pub c: Mat<C64>,
    pub d: Mat<C64>,
}

/// Port selection on one side of a link.
#[derive(Debug, Clone)]
pub enum Endpoint {
    /// Outputs (as a source) or inputs (as a destination) of a child.
    Child { child: usize, ports: Vec<usize> },
    /// External inputs (as a source) or external outputs (as a destination).
    External { ports: Vec<usize> },
}

#[derive(Debug, Clone)]
pub struct Link {
    pub from: Endpoint,
    pub to: Endpoint,
    pub gain: Gain,
}

#[derive(Debug, Clone)]
enum Body {
    Primitive { a: Gain, b: Gain, c: Gain, d: Gain },
    Composite { children: Vec<LtpModel>, links: Vec<Link> },
}

/// Linear time-periodic state-space model
/// `ẋ = A(t) x + B(t) u`, `y = C(t) x + D(t) u`, either primitive or an
/// interconnection of child models.
#[derive(Debug, Clone)]
pub struct LtpModel {
    pub name: String,
    states: Vec<Signal>,
    inputs: Vec<Signal>,
    outputs: Vec<Signal>,
    body: Body,
}

impl LtpModel {
    pub fn primitive(
        name: impl Into<String>,
        states: Vec<Signal>,
        inputs: Vec<Signal>,
        outputs: Vec<Signal>,
        a: impl Into<Gain>,
        b: impl Into<Gain>,
        c: impl Into<Gain>,
        d: impl Into<Gain>,
    ) -> Result<Self> {
        let (a, b, c, d) = (a.into(), b.into(), c.into(), d.into());
        let (nx, nu, ny) = (states.len(), inputs.len(), outputs.len());
        for (m, want, what) in [(&a, (nx, nx), "A"), (&b, (nx, nu), "B"), (&c, (ny, nx), "C"), (&d, (ny, nu), "D")] {
            if m.shape() != want {
                return Err(HarmonicError::Dimension(format!("{what} is {:?}, expected {want:?}", m.shape())));
            }
        }
        Ok(Self { name: name.into(), states, inputs, outputs, body: Body::Primitive { a, b, c, d } })
    }

    /// Static gain `y = D(t) u`.
    pub fn static_gain(name: impl Into<String>, inputs: Vec<Signal>, outputs: Vec<Signal>, d: impl Into<Gain>) -> Result<Self> {
        let (nu, ny) = (inputs.len(), outputs.len());
        Self::primitive(
            name,
            vec![],
            inputs,
            outputs,
            PeriodicMatrix::zeros(0, 0),
            PeriodicMatrix::zeros(0, nu),
            PeriodicMatrix::zeros(ny, 0),
            d,
        )
    }

    pub fn states(&self) -> &[Signal] {
        &self.states
    }

    pub fn inputs(&self) -> &[Signal] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Signal] {
        &self.outputs
    }

    pub fn is_time_invariant(&self) -> bool {
        match &self.body {
            Body::Primitive { a, b, c, d } => [a, b, c, d].iter().all(|g| g.is_constant()),
            Body::Composite { children, links } => {
                children.iter().all(|c| c.is_time_invariant()) && links.iter().all(|l| l.gain.is_constant())
            }
        }
    }

    /// Indices of all input ports whose group equals `group`.
    pub fn input_ports(&self, group: &str) -> Result<Vec<usize>> {
        ports_of(&self.inputs, group)
    }

    pub fn output_ports(&self, group: &str) -> Result<Vec<usize>> {
        ports_of(&self.outputs, group)
    }

    pub fn state_ports(&self, group: &str) -> Result<Vec<usize>> {
        ports_of(&self.states, group)
    }

    /// Realizes the model in the given context.
    pub fn realize(&self, ctx: Context<'_>) -> Result<Realization> {
        match &self.body {
            Body::Primitive { a, b, c, d } => Ok(Realization {
                a: ctx.realize_gain(a, &self.states, &self.states)?,
                b: ctx.realize_gain(b, &self.states, &self.inputs)?,
                c: ctx.realize_gain(c, &self.outputs, &self.states)?,
                d: ctx.realize_gain(d, &self.outputs, &self.inputs)?,
            }),
            Body::Composite { children, links } => self.realize_composite(children, links, ctx),
        }
    }

    /// Real-valued time-domain matrices at angle `theta`.
    pub fn eval(&self, theta: f64) -> Result<Realization> {
        self.realize(Context::Time(theta))
    }

    fn realize_composite(&self, children: &[LtpModel], links: &[Link], ctx: Context<'_>) -> Result<Realization> {
        let parts: Vec<Realization> = children.iter().map(|c| c.realize(ctx)).collect::<Result<_>>()?;
        let port_offsets = |sigs: &[Signal]| {
            let mut o = Vec::with_capacity(sigs.len() + 1);
            let mut acc = 0;
            for s in sigs {
                o.push(acc);
                acc += ctx.dim(s);
            }
            o.push(acc);
            o
        };
        let mut x_off = vec![0];
        let mut u_off = vec![0];
        let mut y_off = vec![0];
        let mut u_ports = Vec::new();
        let mut y_ports = Vec::new();
        for (ch, p) in children.iter().zip(&parts) {
            x_off.push(x_off.last().unwrap() + p.a.nrows());
            u_off.push(u_off.last().unwrap() + p.b.ncols());
            y_off.push(y_off.last().unwrap() + p.c.nrows());
            u_ports.push(port_offsets(&ch.inputs));
            y_ports.push(port_offsets(&ch.outputs));
        }
        let (nx, nu, ny) = (*x_off.last().unwrap(), *u_off.last().unwrap(), *y_off.last().unwrap());
        let w_ports = port_offsets(&self.inputs);
        let z_ports = port_offsets(&self.outputs);
        let (nw, nz) = (*w_ports.last().unwrap(), *z_ports.last().unwrap());

        let zero = C64::new(0.0, 0.0);
        let mut a = Mat::<C64>::zeros(nx, nx);
        let mut b = Mat::<C64>::zeros(nx, nu);
        let mut c = Mat::<C64>::zeros(ny, nx);
        let mut d = Mat::<C64>::zeros(ny, nu);
        for (k, p) in parts.iter().enumerate() {
            copy_block(&mut a, x_off[k], x_off[k], &p.a);
            copy_block(&mut b, x_off[k], u_off[k], &p.b);
            copy_block(&mut c, y_off[k], x_off[k], &p.c);
            copy_block(&mut d, y_off[k], u_off[k], &p.d);
        }

        let mut l = Mat::<C64>::zeros(nu, ny);
        let mut m = Mat::<C64>::zeros(nu, nw);
        let mut pm = Mat::<C64>::zeros(nz, ny);
        let mut q = Mat::<C64>::zeros(nz, nw);
        for link in links {
            let (src_sigs, src_rows): (Vec<Signal>, Vec<(usize, usize)>) = match &link.from {
                Endpoint::Child { child, ports } => {
                    let ch = &children[*child];
                    (
                        ports.iter().map(|&p| ch.outputs[p].clone()).collect(),
                        ports
                            .iter()
                            .map(|&p| (y_off[*child] + y_ports[*child][p], ctx.dim(&ch.outputs[p])))
                            .collect(),
                    )
                }
                Endpoint::External { ports } => (
                    ports.iter().map(|&p| self.inputs[p].clone()).collect(),
                    ports.iter().map(|&p| (w_ports[p], ctx.dim(&self.inputs[p]))).collect(),
                ),
            };
            let (dst_sigs, dst_rows): (Vec<Signal>, Vec<(usize, usize)>) = match &link.to {
                Endpoint::Child { child, ports } => {
                    let ch = &children[*child];
                    (
                        ports.iter().map(|&p| ch.inputs[p].clone()).collect(),
                        ports
                            .iter()
                            .map(|&p| (u_off[*child] + u_ports[*child][p], ctx.dim(&ch.inputs[p])))
                            .collect(),
                    )
                }
                Endpoint::External { ports } => (
                    ports.iter().map(|&p| self.outputs[p].clone()).collect(),
                    ports.iter().map(|&p| (z_ports[p], ctx.dim(&self.outputs[p]))).collect(),
                ),
            };
            let g = ctx.realize_gain(&link.gain, &dst_sigs, &src_sigs)?;
            let target = match (&link.from, &link.to) {
                (Endpoint::Child { .. }, Endpoint::Child { .. }) => &mut l,
                (Endpoint::External { .. }, Endpoint::Child { .. }) => &mut m,
                (Endpoint::Child { .. }, Endpoint::External { .. }) => &mut pm,
                (Endpoint::External { .. }, Endpoint::External { .. }) => &mut q,
            };
            let mut gr = 0;
            for &(r0, rd) in &dst_rows {
                let mut gc = 0;
                for &(c0, cd) in &src_rows {
                    for i in 0..rd {
                        for j in 0..cd {
                            let v = g[(gr + i, gc + j)];
                            if v != zero {
                                target[(r0 + i, c0 + j)] += v;
                            }
                        }
                    }
                    gc += cd;
                }
                gr += rd;
            }
        }

        // u = (I - L D)^{-1} (L C x + M w)
        let mut lhs = Mat::<C64>::identity(nu, nu);
        lhs -= &l * &d;
        let mut rhs = Mat::<C64>::zeros(nu, nx + nw);
        let lc = &l * &c;
        copy_block(&mut rhs, 0, 0, &lc);
        copy_block(&mut rhs, 0, nx, &m);
        let sol = if nu > 0 { lhs.partial_piv_lu().solve(&rhs) } else { rhs };
        if sol.col_iter().any(|col| col.iter().any(|v| !v.re.is_finite() || !v.im.is_finite())) {
            return Err(HarmonicError::Singular(format!("algebraic loop in `{}`", self.name)));
        }
        let gx = Mat::from_fn(nu, nx, |i, j| sol[(i, j)]);
        let gw = Mat::from_fn(nu, nw, |i, j| sol[(i, nx + j)]);
        let a_cl = &a + &b * &gx;
        let b_cl = &b * &gw;
        let y_x = &c + &d * &gx;
        let c_cl = &pm * &y_x;
        let d_cl = &pm * (&d * &gw) + &q;
        Ok(Realization { a: a_cl, b: b_cl, c: c_cl, d: d_cl })
    }
}

fn copy_block(dst: &mut Mat<C64>, r0: usize, c0: usize, src: &Mat<C64>) {
    for j in 0..src.ncols() {
        for i in 0..src.nrows() {
            dst[(r0 + i, c0 + j)] = src[(i, j)];
        }
    }
}

fn ports_of(sigs: &[Signal], group: &str) -> Result<Vec<usize>> {
    let v: Vec<usize> = sigs.iter().enumerate().filter(|(_, s)| s.group == group).map(|(i, _)| i).collect();
    if v.is_empty() {
        Err(HarmonicError::UnknownPort(group.to_string()))
    } else {
        Ok(v)
    }
}

/// Builder for interconnected models.
#[derive(Debug, Clone)]
pub struct Composite {
    name: String,
    children: Vec<LtpModel>,
    inputs: Vec<Signal>,
    outputs: Vec<Signal>,
    links: Vec<Link>,
}

impl Composite {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), children: vec![], inputs: vec![], outputs: vec![], links: vec![] }
    }

    pub fn add_child(&mut self, child: LtpModel) -> usize {
        self.children.push(child);
        self.children.len() - 1
    }

    pub fn child(&self, k: usize) -> &LtpModel {
        &self.children[k]
    }

    /// Declares external input signals; returns their port indices.
    pub fn add_inputs(&mut self, sigs: Vec<Signal>) -> Vec<usize> {
        let start = self.inputs.len();
        self.inputs.extend(sigs);
        (start..self.inputs.len()).collect()
    }

    pub fn add_outputs(&mut self, sigs: Vec<Signal>) -> Vec<usize> {
        let start = self.outputs.len();
        self.outputs.extend(sigs);
        (start..self.outputs.len()).collect()
    }

    pub fn link(&mut self, from: Endpoint, to: Endpoint, gain: impl Into<Gain>) {
        self.links.push(Link { from, to, gain: gain.into() });
    }

    /// Connects output group `out` of child `a` to input group `inp` of child `b`.
    pub fn connect(&mut self, a: usize, out: &str, b: usize, inp: &str, gain: impl Into<Gain>) -> Result<()> {
        let from = Endpoint::Child { child: a, ports: self.children[a].output_ports(out)? };
        let to = Endpoint::Child { child: b, ports: self.children[b].input_ports(inp)? };
        self.link(from, to, gain);
        Ok(())
    }

    /// Feeds external input ports into input group `inp` of child `b`.
    pub fn feed(&mut self, ports: Vec<usize>, b: usize, inp: &str, gain: impl Into<Gain>) -> Result<()> {
        let to = Endpoint::Child { child: b, ports: self.children[b].input_ports(inp)? };
        self.link(Endpoint::External { ports }, to, gain);
        Ok(())
    }

    /// Routes output group `out` of child `a` to external output ports.
    pub fn expose(&mut self, a: usize, out: &str, ports: Vec<usize>, gain: impl Into<Gain>) -> Result<()> {
        let from = Endpoint::Child { child: a, ports: self.children[a].output_ports(out)? };
        self.link(from, Endpoint::External { ports }, gain);
        Ok(())
    }

    pub fn build(self) -> LtpModel {
        let mut states = Vec::new();
        for ch in &self.children {
            states.extend(ch.states.iter().map(|s| s.prefixed(&ch.name)));
        }
        LtpModel {
            name: self.name,
            states,
            inputs: self.inputs,
            outputs: self.outputs,
            body: Body::Composite { children: self.children, links: self.links },
        }
    }
}
