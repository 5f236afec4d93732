use crate::config::TdsConfig;
use crate::error::{Result, TdsError};
use crate::simulate::TimeSeries;
use hsa_harmonic::{HarmonicIndexSet, HarmonicSpectrum};
use std::collections::BTreeMap;

/// Largest relative change of the per-period RMS between consecutive
/// periods inside the last `periods` periods.
pub fn window_rms_change(series: &TimeSeries, periods: usize) -> Result<f64> {
    let n = series.samples_per_period;
    let len = series.len();
    if n == 0 || len < periods * n || len % n != 0 {
        return Err(TdsError::InvalidConfig(format!("series holds fewer than {periods} whole periods")));
    }
    let rms = |c: &[f64]| (c.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let mut worst = 0.0f64;
    let scale = series.columns.iter().map(|c| rms(&c[len - n..])).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for c in &series.columns {
        for p in 1..periods {
            let a = rms(&c[len - (p + 1) * n..len - p * n]);
            let b = rms(&c[len - p * n..len - (p - 1) * n]);
            worst = worst.max((b - a).abs() / a.max(b).max(1e-6 * scale));
        }
    }
    Ok(worst)
}

/// Fourier coefficients of one column over the last `periods` periods,
/// orders `−h_max..=h_max`.
pub fn column_spectrum(series: &TimeSeries, col: usize, periods: usize, h_max: usize) -> Result<HarmonicSpectrum> {
    let n = series.samples_per_period;
    let c = &series.columns[col];
    let len = c.len();
    if len < periods * n || periods == 0 {
        return Err(TdsError::InvalidConfig("window longer than the series".into()));
    }
    // Folding whole periods keeps exactly the harmonics of f1.
    let mut folded = vec![0.0; n];
    for p in 0..periods {
        let start = len - (periods - p) * n;
        for (f, v) in folded.iter_mut().zip(&c[start..start + n]) {
            *f += v / periods as f64;
        }
    }
    let idx = HarmonicIndexSet::new(h_max, series.f1)?;
    Ok(HarmonicSpectrum::from_samples(idx, &[folded])?)
}

/// Steady-state spectrum of every recorded column over the last
/// `cfg.fft_window` periods. Fails if the per-period RMS still changes by
/// more than `rms_tol` inside the window.
pub fn steady_state_spectrum(series: &TimeSeries, cfg: &TdsConfig, rms_tol: f64) -> Result<BTreeMap<String, HarmonicSpectrum>> {
    let change = window_rms_change(series, cfg.fft_window)?;
    if change > rms_tol {
        return Err(TdsError::Unsettled { residual: change });
    }
    series
        .labels
        .iter()
        .enumerate()
        .map(|(k, l)| Ok((l.clone(), column_spectrum(series, k, cfg.fft_window, cfg.h_max)?)))
        .collect()
}

/// Joins the per-phase spectra `<label>.a/b/c` into one 3-channel spectrum.
pub fn group_spectrum(spectra: &BTreeMap<String, HarmonicSpectrum>, label: &str) -> Result<HarmonicSpectrum> {
    let parts: Vec<&HarmonicSpectrum> = ["a", "b", "c"]
        .iter()
        .map(|p| spectra.get(&format!("{label}.{p}")).ok_or_else(|| TdsError::InvalidConfig(format!("{label} not recorded"))))
        .collect::<Result<_>>()?;
    let idx = parts[0].index_set();
    Ok(HarmonicSpectrum::from_fn(idx, 3, |ch, h| parts[ch].get(0, h)))
}
