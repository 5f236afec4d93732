use crate::error::{HarmonicError, Result};
use faer::Mat;
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Real-valued periodic matrix `M(θ) = Σ_k M_k e^{jkθ}` with `θ = ω t`.
#[derive(Debug, Clone)]
pub struct PeriodicMatrix {
    rows: usize,
    cols: usize,
    terms: BTreeMap<i32, Mat<C64>>,
}

const PHASES: [f64; 3] = [0.0, 2.0 * PI / 3.0, -2.0 * PI / 3.0];

impl PeriodicMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, terms: BTreeMap::new() }
    }

    pub fn constant(m: Mat<C64>) -> Self {
        let (rows, cols) = (m.nrows(), m.ncols());
        let mut terms = BTreeMap::new();
        terms.insert(0, m);
        Self { rows, cols, terms }
    }

    pub fn constant_real(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        Self::constant(Mat::from_fn(rows, cols, |i, j| C64::new(f(i, j), 0.0)))
    }

    /// `rows x cols` row-major data.
    pub fn from_rows(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self::constant_real(rows, cols, |i, j| data[i * cols + j])
    }

    pub fn identity(n: usize) -> Self {
        Self::constant_real(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn scalar_identity(n: usize, k: f64) -> Self {
        Self::constant_real(n, n, |i, j| if i == j { k } else { 0.0 })
    }

    pub fn from_terms(rows: usize, cols: usize, terms: BTreeMap<i32, Mat<C64>>) -> Result<Self> {
        for m in terms.values() {
            if m.nrows() != rows || m.ncols() != cols {
                return Err(HarmonicError::Dimension(format!("term is {}x{}, expected {rows}x{cols}", m.nrows(), m.ncols())));
            }
        }
        Ok(Self { rows, cols, terms })
    }

    /// Fourier series of a sampled real matrix function, keeping orders up to
    /// `max_order`. `n_samples` must exceed twice the bandwidth of `f` for an
    /// alias-free result.
    pub fn from_sampler(rows: usize, cols: usize, max_order: usize, n_samples: usize, f: impl Fn(f64) -> Mat<f64>) -> Self {
        assert!(n_samples > 2 * max_order);
        let samples: Vec<Mat<f64>> = (0..n_samples).map(|k| f(2.0 * PI * k as f64 / n_samples as f64)).collect();
        let mut terms = BTreeMap::new();
        let mut scale: f64 = 0.0;
        for s in &samples {
            for i in 0..rows {
                for j in 0..cols {
                    scale = scale.max(s[(i, j)].abs());
                }
            }
        }
        let floor = 1e-15 * scale;
        for k in -(max_order as i32)..=max_order as i32 {
            let mut m = Mat::<C64>::zeros(rows, cols);
            let mut any = false;
            for (n, s) in samples.iter().enumerate() {
                let w = C64::from_polar(1.0, -(k as f64) * 2.0 * PI * n as f64 / n_samples as f64) / n_samples as f64;
                for i in 0..rows {
                    for j in 0..cols {
                        m[(i, j)] += w * s[(i, j)];
                    }
                }
            }
            for i in 0..rows {
                for j in 0..cols {
                    if m[(i, j)].norm() <= floor {
                        m[(i, j)] = C64::new(0.0, 0.0);
                    } else {
                        any = true;
                    }
                }
            }
            if k == 0 {
                for i in 0..rows {
                    for j in 0..cols {
                        m[(i, j)].im = 0.0;
                    }
                }
            }
            if any {
                terms.insert(k, m);
            }
        }
        Self { rows, cols, terms }
    }

    /// Amplitude-invariant Park transform ABC → DQ (2x3), D aligned with phase A at θ = 0.
    pub fn park() -> Self {
        let mut p = Self::park_dqz();
        for m in p.terms.values_mut() {
            *m = Mat::from_fn(2, 3, |i, j| m[(i, j)]);
        }
        p.rows = 2;
        p
    }

    /// Inverse Park transform DQ → ABC (3x2).
    pub fn inv_park() -> Self {
        let mut p = Self::inv_park_dqz();
        for m in p.terms.values_mut() {
            *m = Mat::from_fn(3, 2, |i, j| m[(i, j)]);
        }
        p.cols = 2;
        p
    }

    /// Park transform ABC → DQZ (3x3), Z the average of the phases.
    pub fn park_dqz() -> Self {
        let mut plus = Mat::<C64>::zeros(3, 3);
        let mut minus = Mat::<C64>::zeros(3, 3);
        let mut zero = Mat::<C64>::zeros(3, 3);
        let j = C64::new(0.0, 1.0);
        for (x, &phi) in PHASES.iter().enumerate() {
            let em = C64::from_polar(1.0, -phi);
            let ep = C64::from_polar(1.0, phi);
            plus[(0, x)] = em / 3.0;
            minus[(0, x)] = ep / 3.0;
            plus[(1, x)] = j * em / 3.0;
            minus[(1, x)] = -j * ep / 3.0;
            zero[(2, x)] = C64::new(1.0 / 3.0, 0.0);
        }
        let mut terms = BTreeMap::new();
        terms.insert(-1, minus);
        terms.insert(0, zero);
        terms.insert(1, plus);
        Self { rows: 3, cols: 3, terms }
    }

    /// Inverse Park transform DQZ → ABC (3x3).
    pub fn inv_park_dqz() -> Self {
        let mut plus = Mat::<C64>::zeros(3, 3);
        let mut minus = Mat::<C64>::zeros(3, 3);
        let mut zero = Mat::<C64>::zeros(3, 3);
        let j = C64::new(0.0, 1.0);
        for (x, &phi) in PHASES.iter().enumerate() {
            let em = C64::from_polar(1.0, -phi);
            let ep = C64::from_polar(1.0, phi);
            plus[(x, 0)] = em / 2.0;
            minus[(x, 0)] = ep / 2.0;
            plus[(x, 1)] = j * em / 2.0;
            minus[(x, 1)] = -j * ep / 2.0;
            zero[(x, 2)] = C64::new(1.0, 0.0);
        }
        let mut terms = BTreeMap::new();
        terms.insert(-1, minus);
        terms.insert(0, zero);
        terms.insert(1, plus);
        Self { rows: 3, cols: 3, terms }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn terms(&self) -> &BTreeMap<i32, Mat<C64>> {
        &self.terms
    }

    pub fn term(&self, k: i32) -> Option<&Mat<C64>> {
        self.terms.get(&k)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|&k| k == 0)
    }

    pub fn max_order(&self) -> usize {
        self.terms.keys().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0)
    }

    /// Matrix value at angle `theta`.
    pub fn eval(&self, theta: f64) -> Mat<C64> {
        let mut m = Mat::<C64>::zeros(self.rows, self.cols);
        for (&k, t) in &self.terms {
            let e = C64::from_polar(1.0, k as f64 * theta);
            for i in 0..self.rows {
                for j in 0..self.cols {
                    m[(i, j)] += t[(i, j)] * e;
                }
            }
        }
        m
    }

    pub fn eval_real(&self, theta: f64) -> Mat<f64> {
        let m = self.eval(theta);
        Mat::from_fn(self.rows, self.cols, |i, j| m[(i, j)].re)
    }

    /// Block-Toeplitz lift. Row signal `r` keeps orders `±row_ranges[r]`,
    /// column signal `c` orders `±col_ranges[c]`; entry
    /// `[(r, p), (c, q)] = M_{p-q}[r, c]`.
    pub fn lift(&self, row_ranges: &[usize], col_ranges: &[usize]) -> Result<Mat<C64>> {
        if row_ranges.len() != self.rows || col_ranges.len() != self.cols {
            return Err(HarmonicError::Dimension(format!(
                "lifting a {}x{} matrix with {}x{} ranges",
                self.rows,
                self.cols,
                row_ranges.len(),
                col_ranges.len()
            )));
        }
        let (ro, nr) = offsets(row_ranges);
        let (co, nc) = offsets(col_ranges);
        let mut out = Mat::<C64>::zeros(nr, nc);
        for (&k, t) in &self.terms {
            for r in 0..self.rows {
                let hr = row_ranges[r] as i32;
                for c in 0..self.cols {
                    let v = t[(r, c)];
                    if v.re == 0.0 && v.im == 0.0 {
                        continue;
                    }
                    let hc = col_ranges[c] as i32;
                    for p in -hr..=hr {
                        let q = p - k;
                        if q.abs() <= hc {
                            out[(ro[r] + (p + hr) as usize, co[c] + (q + hc) as usize)] += v;
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Product `self(θ) · other(θ)` as an untruncated series.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(HarmonicError::Dimension("inner dimensions differ".into()));
        }
        let mut terms: BTreeMap<i32, Mat<C64>> = BTreeMap::new();
        for (&k1, a) in &self.terms {
            for (&k2, b) in &other.terms {
                let p = a * b;
                terms
                    .entry(k1 + k2)
                    .and_modify(|m| *m += &p)
                    .or_insert(p);
            }
        }
        Ok(Self { rows: self.rows, cols: other.cols, terms })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(HarmonicError::Dimension("shapes differ".into()));
        }
        let mut terms = self.terms.clone();
        for (&k, b) in &other.terms {
            terms.entry(k).and_modify(|m| *m += b).or_insert_with(|| b.clone());
        }
        Ok(Self { rows: self.rows, cols: self.cols, terms })
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(&k, m)| (k, Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * alpha)))
            .collect();
        Self { rows: self.rows, cols: self.cols, terms }
    }

    /// Block-diagonal stacking.
    pub fn block_diag(parts: &[&PeriodicMatrix]) -> Self {
        let rows = parts.iter().map(|p| p.rows).sum();
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut terms: BTreeMap<i32, Mat<C64>> = BTreeMap::new();
        let (mut r0, mut c0) = (0, 0);
        for p in parts {
            for (&k, m) in &p.terms {
                let t = terms.entry(k).or_insert_with(|| Mat::zeros(rows, cols));
                for i in 0..p.rows {
                    for j in 0..p.cols {
                        t[(r0 + i, c0 + j)] = m[(i, j)];
                    }
                }
            }
            r0 += p.rows;
            c0 += p.cols;
        }
        Self { rows, cols, terms }
    }
}

fn offsets(ranges: &[usize]) -> (Vec<usize>, usize) {
    let mut o = Vec::with_capacity(ranges.len());
    let mut acc = 0;
    for &h in ranges {
        o.push(acc);
        acc += 2 * h + 1;
    }
    (o, acc)
}

/// A gain whose harmonic-domain lift is not the plain Toeplitz lift of its
/// time-domain value (e.g. a truncated series expansion).
pub trait CustomGain: Send + Sync + fmt::Debug {
    fn shape(&self) -> (usize, usize);
    fn eval(&self, theta: f64) -> Mat<C64>;
    fn lift(&self, row_ranges: &[usize], col_ranges: &[usize]) -> Result<Mat<C64>>;
}

#[derive(Debug, Clone)]
pub enum Gain {
    Periodic(PeriodicMatrix),
    Custom(Arc<dyn CustomGain>),
}

impl Gain {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Gain::Periodic(p) => (p.nrows(), p.ncols()),
            Gain::Custom(c) => c.shape(),
        }
    }

    pub fn eval(&self, theta: f64) -> Mat<C64> {
        match self {
            Gain::Periodic(p) => p.eval(theta),
            Gain::Custom(c) => c.eval(theta),
        }
    }

    pub fn lift(&self, row_ranges: &[usize], col_ranges: &[usize]) -> Result<Mat<C64>> {
        match self {
            Gain::Periodic(p) => p.lift(row_ranges, col_ranges),
            Gain::Custom(c) => c.lift(row_ranges, col_ranges),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Gain::Periodic(p) if p.is_constant())
    }
}

impl From<PeriodicMatrix> for Gain {
    fn from(p: PeriodicMatrix) -> Self {
        Gain::Periodic(p)
    }
}
