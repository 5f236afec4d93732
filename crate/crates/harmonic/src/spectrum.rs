use crate::error::{HarmonicError, Result};
use crate::index::HarmonicIndexSet;
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Truncated two-sided Fourier coefficients of a (multi-channel) periodic signal.
///
/// Storage is channel-major, orders ascending from `-h_max` to `+h_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSpectrum {
    index_set: HarmonicIndexSet,
    channels: usize,
    coeffs: Vec<C64>,
}

impl HarmonicSpectrum {
    pub fn zeros(index_set: HarmonicIndexSet, channels: usize) -> Self {
        assert!(channels > 0, "channel count must be positive");
        Self { index_set, channels, coeffs: vec![C64::new(0.0, 0.0); channels * index_set.len()] }
    }

    pub fn from_coefficients(index_set: HarmonicIndexSet, channels: usize, coeffs: Vec<C64>) -> Result<Self> {
        if channels == 0 || coeffs.len() != channels * index_set.len() {
            return Err(HarmonicError::Dimension(format!(
                "{} coefficients for {} channels of {} orders",
                coeffs.len(),
                channels,
                index_set.len()
            )));
        }
        Ok(Self { index_set, channels, coeffs })
    }

    /// Builds a spectrum from `f(channel, order)`.
    pub fn from_fn(index_set: HarmonicIndexSet, channels: usize, f: impl Fn(usize, i32) -> C64) -> Self {
        let mut s = Self::zeros(index_set, channels);
        for ch in 0..channels {
            for h in index_set.orders() {
                s.set(ch, h, f(ch, h));
            }
        }
        s
    }

    /// DFT of real samples covering exactly one fundamental period.
    ///
    /// `samples[ch]` holds equally spaced samples starting at t = 0; at least
    /// `2 h_max + 1` samples are needed.
    pub fn from_samples(index_set: HarmonicIndexSet, samples: &[Vec<f64>]) -> Result<Self> {
        let channels = samples.len();
        if channels == 0 {
            return Err(HarmonicError::Dimension("no channels".into()));
        }
        let n = samples[0].len();
        if n < index_set.len() || samples.iter().any(|s| s.len() != n) {
            return Err(HarmonicError::Dimension(format!(
                "need equal sample counts of at least {} per channel",
                index_set.len()
            )));
        }
        let fft = FftPlanner::new().plan_fft_forward(n);
        let mut out = Self::zeros(index_set, channels);
        let hm = index_set.h_max as i32;
        for (ch, s) in samples.iter().enumerate() {
            let mut buf: Vec<C64> = s.iter().map(|&v| C64::new(v, 0.0)).collect();
            fft.process(&mut buf);
            for h in 1..=hm {
                let x = buf[h as usize] / n as f64;
                out.set(ch, h, x);
                out.set(ch, -h, x.conj());
            }
            out.set(ch, 0, C64::new(buf[0].re / n as f64, 0.0));
        }
        Ok(out)
    }

    pub fn index_set(&self) -> HarmonicIndexSet {
        self.index_set
    }

    pub fn channel_count(&self) -> usize {
        self.channels
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn channel(&self, ch: usize) -> &[C64] {
        let n = self.index_set.len();
        &self.coeffs[ch * n..(ch + 1) * n]
    }

    /// Coefficient at order `h`; orders outside the index set read as zero.
    pub fn get(&self, ch: usize, h: i32) -> C64 {
        match self.index_set.position(h) {
            Some(p) => self.coeffs[ch * self.index_set.len() + p],
            None => C64::new(0.0, 0.0),
        }
    }

    pub fn set(&mut self, ch: usize, h: i32, value: C64) {
        let p = self
            .index_set
            .position(h)
            .unwrap_or_else(|| panic!("order {h} outside ±{}", self.index_set.h_max));
        let n = self.index_set.len();
        self.coeffs[ch * n + p] = value;
    }

    /// Checks `X_{-h} = conj(X_h)` on every channel.
    pub fn is_conjugate_symmetric(&self, tol: f64) -> bool {
        (0..self.channels).all(|ch| {
            (0..=self.index_set.h_max as i32).all(|h| (self.get(ch, -h) - self.get(ch, h).conj()).norm() <= tol)
        })
    }

    /// Value of channel `ch` at time `t`.
    pub fn eval(&self, ch: usize, t: f64) -> C64 {
        self.eval_angle(ch, self.index_set.omega() * t)
    }

    /// Value of channel `ch` at angle `theta = ω t`.
    pub fn eval_angle(&self, ch: usize, theta: f64) -> C64 {
        self.index_set
            .orders()
            .map(|h| self.get(ch, h) * C64::from_polar(1.0, h as f64 * theta))
            .sum()
    }

    /// Real part of `n` equally spaced samples over one period.
    pub fn sample(&self, ch: usize, n: usize) -> Vec<f64> {
        (0..n).map(|k| self.eval_angle(ch, 2.0 * PI * k as f64 / n as f64).re).collect()
    }

    /// Re-indexes onto another order range, dropping or zero-filling orders.
    pub fn reindexed(&self, index_set: HarmonicIndexSet) -> Self {
        let mut out = Self::zeros(index_set, self.channels);
        for ch in 0..self.channels {
            for h in index_set.orders() {
                out.set(ch, h, self.get(ch, h));
            }
        }
        out
    }

    /// Single-channel view of channel `ch`.
    pub fn select(&self, ch: usize) -> Self {
        Self { index_set: self.index_set, channels: 1, coeffs: self.channel(ch).to_vec() }
    }

    pub fn scaled(&self, alpha: C64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * alpha).collect(), ..self.clone() }
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.index_set.check_same(&other.index_set)?;
        if self.channels != other.channels {
            return Err(HarmonicError::Dimension("channel count differs".into()));
        }
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// Largest coefficient magnitude over non-zero orders.
    pub fn max_harmonic_magnitude(&self) -> f64 {
        let mut m: f64 = 0.0;
        for ch in 0..self.channels {
            for h in self.index_set.orders().filter(|&h| h != 0) {
                m = m.max(self.get(ch, h).norm());
            }
        }
        m
    }
}
