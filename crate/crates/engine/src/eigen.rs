use crate::error::{EngineError, Result};
use faer::Mat;
use hsa_harmonic::{HssModel, LiftedLabel, C64};
use std::cmp::Ordering;

/// Eigenvalues (sorted by real, then imaginary part) with optional
/// eigenvectors aligned column-wise.
#[derive(Debug, Clone)]
pub struct EigenSet {
    pub values: Vec<C64>,
    pub vectors: Option<Mat<C64>>,
    pub labels: Vec<LiftedLabel>,
    /// Frobenius norm of the source matrix.
    pub a_norm: f64,
    pub max_residual: f64,
}

pub fn damping(l: C64) -> f64 {
    let m = l.norm();
    if m == 0.0 {
        1.0
    } else {
        -l.re / m
    }
}

pub fn canonical_cmp(a: &C64, b: &C64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

impl EigenSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn damping(&self) -> Vec<f64> {
        self.values.iter().map(|l| damping(*l)).collect()
    }

    pub fn from_values(mut values: Vec<C64>) -> Self {
        values.sort_by(canonical_cmp);
        Self { values, vectors: None, labels: Vec::new(), a_norm: 0.0, max_residual: 0.0 }
    }

    pub fn max_real(&self) -> f64 {
        self.values.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Full eigendecomposition of `a`. With `vectors`, every pair is checked
/// against `‖Av − λv‖ < 1e-8 ‖A‖` for unit `v`.
pub fn eigensolve_matrix(a: &Mat<C64>, labels: Vec<LiftedLabel>, vectors: bool) -> Result<EigenSet> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(EngineError::Dimension("matrix is not square".into()));
    }
    if !(0..n).all(|j| (0..n).all(|i| a[(i, j)].re.is_finite() && a[(i, j)].im.is_finite())) {
        return Err(EngineError::NonFinite);
    }
    let norm = a.norm_l2();
    if n == 0 {
        return Ok(EigenSet { values: vec![], vectors: vectors.then(|| Mat::zeros(0, 0)), labels, a_norm: 0.0, max_residual: 0.0 });
    }
    if !vectors {
        let mut values = a
            .eigenvalues()
            .map_err(|e| EngineError::Solver { n, norm, msg: format!("{e:?}") })?;
        values.sort_by(canonical_cmp);
        return Ok(EigenSet { values, vectors: None, labels, a_norm: norm, max_residual: 0.0 });
    }
    let evd = a.eigen().map_err(|e| EngineError::Solver { n, norm, msg: format!("{e:?}") })?;
    let (s, u) = (evd.S(), evd.U());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| canonical_cmp(&s[i], &s[j]));
    let values: Vec<C64> = order.iter().map(|&k| s[k]).collect();
    let mut v = Mat::<C64>::zeros(n, n);
    let mut max_residual = 0.0f64;
    for (col, &k) in order.iter().enumerate() {
        let nrm = (0..n).map(|i| u[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            v[(i, col)] = u[(i, k)] / nrm;
        }
    }
    let av = a * &v;
    for (col, lam) in values.iter().enumerate() {
        let r: f64 = (0..n).map(|i| (av[(i, col)] - lam * v[(i, col)]).norm_sqr()).sum();
        max_residual = max_residual.max(r.sqrt());
    }
    let bound = 1e-8 * norm.max(f64::MIN_POSITIVE);
    if max_residual > bound {
        return Err(EngineError::Residual { residual: max_residual, bound });
    }
    Ok(EigenSet { values, vectors: Some(v), labels, a_norm: norm, max_residual })
}

pub fn eigensolve(model: &HssModel) -> Result<EigenSet> {
    eigensolve_matrix(&model.a_tilde, model.states.clone(), true)
}

pub fn eigenvalues(model: &HssModel) -> Result<EigenSet> {
    eigensolve_matrix(&model.a_tilde, model.states.clone(), false)
}
