use crate::index::HarmonicIndexSet;
use faer::Mat;
use num_complex::Complex64 as C64;

/// Block-diagonal frequency-shift operator `N̂` with `j h ω` on the diagonal.
#[derive(Debug, Clone)]
pub struct FrequencyShiftOperator {
    index_set: HarmonicIndexSet,
    state_dim: usize,
    diagonal: Vec<C64>,
}

/// Shift operator for `state_dim` states, each lifted over `idx`.
pub fn shift_operator(idx: HarmonicIndexSet, state_dim: usize) -> FrequencyShiftOperator {
    assert!(state_dim >= 1, "state_dim must be positive");
    let w = idx.omega();
    let diagonal = (0..state_dim)
        .flat_map(|_| idx.orders().map(move |h| C64::new(0.0, h as f64 * w)))
        .collect();
    FrequencyShiftOperator { index_set: idx, state_dim, diagonal }
}

impl FrequencyShiftOperator {
    /// Shift operator over states with individual ranges (lifted dimension
    /// `Σ (2 h_i + 1)`, orders ascending per state).
    pub fn from_ranges(f1: f64, ranges: &[usize]) -> Self {
        let w = 2.0 * std::f64::consts::PI * f1;
        let diagonal = ranges
            .iter()
            .flat_map(|&h| (-(h as i32)..=h as i32).map(move |k| C64::new(0.0, k as f64 * w)))
            .collect();
        let h_max = ranges.iter().copied().max().unwrap_or(0);
        Self { index_set: HarmonicIndexSet { h_max, f1 }, state_dim: ranges.len(), diagonal }
    }

    pub fn index_set(&self) -> HarmonicIndexSet {
        self.index_set
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn diagonal(&self) -> &[C64] {
        &self.diagonal
    }

    pub fn matrix(&self) -> Mat<C64> {
        let n = self.diagonal.len();
        let mut m = Mat::<C64>::zeros(n, n);
        for (i, d) in self.diagonal.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }
}
