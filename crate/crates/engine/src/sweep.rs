use crate::assignment::lap_match;
use crate::classify::{EigenClass, EigenLabel};
use crate::eigen::EigenSet;
use crate::error::Result;
use hsa_harmonic::C64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    /// `p_k = p_0 (1 + k·s)`.
    RelativeToInitial,
    /// `p_k = p_{k−1} (1 + s)`.
    RelativeToPrevious,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    /// Relative step, signed (e.g. `0.01` up, `-0.01` down).
    pub relative_step: f64,
    pub steps: usize,
    pub kind: StepKind,
}

impl Schedule {
    /// Parameter values for steps `0..=steps`.
    pub fn values(&self, initial: f64) -> Vec<f64> {
        let mut out = vec![initial];
        for k in 1..=self.steps {
            out.push(match self.kind {
                StepKind::RelativeToInitial => initial * (1.0 + k as f64 * self.relative_step),
                StepKind::RelativeToPrevious => out[k - 1] * (1.0 + self.relative_step),
            });
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SensitivityTrace {
    pub parameter: String,
    pub values: Vec<f64>,
    pub steps: Vec<EigenSet>,
    /// `to_initial[k][i]`: index at step `k` of the locus that starts at
    /// eigenvalue `i` of step 0.
    pub to_initial: Vec<Vec<usize>>,
    /// Step index and message if a step failed; `steps` then stops before it.
    pub aborted: Option<(usize, String)>,
}

impl SensitivityTrace {
    pub fn locus(&self, i: usize) -> Vec<C64> {
        self.steps.iter().zip(&self.to_initial).map(|(s, p)| s.values[p[i]]).collect()
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }
}

/// Solves every step (on up to `threads` workers) and chains LAP matches
/// between consecutive steps.
pub fn sensitivity_sweep<F>(parameter: &str, initial: f64, schedule: &Schedule, threads: usize, solve: F) -> SensitivityTrace
where
    F: Fn(f64) -> Result<EigenSet> + Sync,
{
    let values = schedule.values(initial);
    let n = values.len();
    let threads = threads.clamp(1, n);
    let mut results: Vec<Option<Result<EigenSet>>> = (0..n).map(|_| None).collect();
    std::thread::scope(|s| {
        let chunks: Vec<_> = results.chunks_mut(n.div_ceil(threads)).collect();
        let mut start = 0;
        for chunk in chunks {
            let (vals, solve) = (&values[start..start + chunk.len()], &solve);
            start += chunk.len();
            s.spawn(move || {
                for (slot, v) in chunk.iter_mut().zip(vals) {
                    *slot = Some(solve(*v));
                }
            });
        }
    });
    let mut steps = Vec::new();
    let mut to_initial: Vec<Vec<usize>> = Vec::new();
    let mut aborted = None;
    for (k, r) in results.into_iter().enumerate() {
        match r.expect("every step is solved") {
            Ok(es) => {
                let map = match steps.last() {
                    None => (0..es.len()).collect(),
                    Some(prev) => {
                        let p = lap_match(prev, &es);
                        to_initial[k - 1].iter().map(|&i| p[i]).collect()
                    }
                };
                steps.push(es);
                to_initial.push(map);
            }
            Err(e) => {
                aborted = Some((k, e.to_string()));
                break;
            }
        }
    }
    let values = values[..steps.len()].to_vec();
    SensitivityTrace { parameter: parameter.to_string(), values, steps, to_initial, aborted }
}

/// Mask of eigenvalues labelled DI.
pub fn di_mask(classes: &[EigenClass]) -> Vec<bool> {
    classes.iter().map(|c| c.label == EigenLabel::Di).collect()
}

/// Eigenvalues with `|Re λ| ≤ rel_tol · ‖Ã‖`, the zero-real-part artefacts.
pub fn spurious_mask(es: &EigenSet, rel_tol: f64) -> Vec<bool> {
    es.values.iter().map(|l| l.re.abs() <= rel_tol * es.a_norm).collect()
}

/// First step at which a non-excluded locus has `Re λ ≥ 0`.
pub fn stability_margin(trace: &SensitivityTrace, exclude: &[bool]) -> Option<usize> {
    (0..trace.steps.len()).find(|&k| {
        trace.to_initial[k]
            .iter()
            .enumerate()
            .filter(|(i, _)| !exclude.get(*i).copied().unwrap_or(false))
            .any(|(_, &j)| trace.steps[k].values[j].re >= 0.0)
    })
}

/// First step at which an eigenvalue not excluded by that step's own mask
/// has `Re λ ≥ 0`. `masks[k]` is indexed like `trace.steps[k]`.
pub fn stability_margin_masked(trace: &SensitivityTrace, masks: &[Vec<bool>]) -> Option<usize> {
    (0..trace.steps.len()).find(|&k| {
        trace.steps[k]
            .values
            .iter()
            .enumerate()
            .any(|(j, l)| l.re >= 0.0 && !masks.get(k).and_then(|m| m.get(j)).copied().unwrap_or(false))
    })
}
