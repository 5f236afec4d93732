use crate::error::{HarmonicError, Result};
use crate::index::HarmonicIndexSet;
use crate::spectrum::HarmonicSpectrum;
use faer::Mat;
use num_complex::Complex64 as C64;

/// Toeplitz lift of a spectrum: multiplication by a periodic signal in the
/// harmonic domain. Multi-channel spectra give a block-diagonal operator,
/// one block per channel.
#[derive(Debug, Clone)]
pub struct ToeplitzOperator {
    index_set: HarmonicIndexSet,
    channels: usize,
    matrix: Mat<C64>,
}

pub fn toeplitz_from_spectrum(x: &HarmonicSpectrum) -> ToeplitzOperator {
    let idx = x.index_set();
    let n = idx.len();
    let ch = x.channel_count();
    let mut m = Mat::<C64>::zeros(ch * n, ch * n);
    let orders: Vec<i32> = idx.orders().collect();
    for c in 0..ch {
        for (i, &hi) in orders.iter().enumerate() {
            for (j, &hj) in orders.iter().enumerate() {
                m[(c * n + i, c * n + j)] = x.get(c, hi - hj);
            }
        }
    }
    ToeplitzOperator { index_set: idx, channels: ch, matrix: m }
}

impl ToeplitzOperator {
    pub fn from_matrix(index_set: HarmonicIndexSet, channels: usize, matrix: Mat<C64>) -> Result<Self> {
        let n = channels * index_set.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(HarmonicError::Dimension(format!("expected {n}x{n} operator")));
        }
        Ok(Self { index_set, channels, matrix })
    }

    pub fn identity(index_set: HarmonicIndexSet, channels: usize) -> Self {
        let n = channels * index_set.len();
        Self { index_set, channels, matrix: Mat::identity(n, n) }
    }

    pub fn index_set(&self) -> HarmonicIndexSet {
        self.index_set
    }

    pub fn channel_count(&self) -> usize {
        self.channels
    }

    pub fn matrix(&self) -> &Mat<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Mat<C64> {
        self.matrix
    }

    /// Repeats a single-channel operator on the diagonal of `channels` blocks.
    pub fn replicate(&self, channels: usize) -> Result<Self> {
        if self.channels != 1 {
            return Err(HarmonicError::Dimension("only scalar operators can be replicated".into()));
        }
        let n = self.index_set.len();
        let mut m = Mat::<C64>::zeros(channels * n, channels * n);
        for c in 0..channels {
            for i in 0..n {
                for j in 0..n {
                    m[(c * n + i, c * n + j)] = self.matrix[(i, j)];
                }
            }
        }
        Ok(Self { index_set: self.index_set, channels, matrix: m })
    }

    pub fn apply(&self, y: &HarmonicSpectrum) -> Result<HarmonicSpectrum> {
        self.index_set.check_same(&y.index_set())?;
        if y.channel_count() != self.channels {
            return Err(HarmonicError::Dimension(format!(
                "operator has {} channels, spectrum {}",
                self.channels,
                y.channel_count()
            )));
        }
        let n = self.matrix.nrows();
        let out: Vec<C64> = (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)] * y.coefficients()[j]).sum())
            .collect();
        HarmonicSpectrum::from_coefficients(self.index_set, self.channels, out)
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.index_set.check_same(&other.index_set)?;
        if self.channels != other.channels {
            return Err(HarmonicError::Dimension("channel count differs".into()));
        }
        Ok(Self { index_set: self.index_set, channels: self.channels, matrix: &self.matrix * &other.matrix })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.index_set.check_same(&other.index_set)?;
        if self.channels != other.channels {
            return Err(HarmonicError::Dimension("channel count differs".into()));
        }
        Ok(Self { index_set: self.index_set, channels: self.channels, matrix: &self.matrix + &other.matrix })
    }

    pub fn scaled(&self, alpha: C64) -> Self {
        let m = Mat::from_fn(self.matrix.nrows(), self.matrix.ncols(), |i, j| self.matrix[(i, j)] * alpha);
        Self { index_set: self.index_set, channels: self.channels, matrix: m }
    }
}
