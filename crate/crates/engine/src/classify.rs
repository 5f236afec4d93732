use crate::assignment::lap_match;
use crate::eigen::EigenSet;
use crate::error::{EngineError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EigenLabel {
    /// Control-design invariant: moves only with hardware parameters.
    #[serde(rename = "CDI")]
    Cdi,
    /// Control-design variant: moves with control parameters.
    #[serde(rename = "CDV")]
    Cdv,
    /// Design invariant: unaffected by any parameter.
    #[serde(rename = "DI")]
    Di,
}

impl std::fmt::Display for EigenLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EigenLabel::Cdi => "CDI",
            EigenLabel::Cdv => "CDV",
            EigenLabel::Di => "DI",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenClass {
    pub label: EigenLabel,
    /// Displacement when only control parameters are perturbed.
    pub control_displacement: f64,
    /// Displacement when all parameters are perturbed.
    pub all_displacement: f64,
    /// A displacement fell within `[ε, 2ε]`.
    pub ambiguous: bool,
}

/// Which parameters a builder should perturb.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    Nominal,
    Control(f64),
    All(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    /// Relative parameter perturbation.
    pub delta: f64,
    /// Movement threshold relative to the Frobenius norm of the nominal Ã.
    pub eps_rel: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { delta: 1e-2, eps_rel: 1e-9 }
    }
}

/// Labels each nominal eigenvalue from its displacement in two perturbed
/// systems, matched to the nominal one by LAP.
pub fn classify_sets(nominal: &EigenSet, control: &EigenSet, all: &EigenSet, eps_move: f64) -> Result<Vec<EigenClass>> {
    if control.len() != nominal.len() || all.len() != nominal.len() {
        return Err(EngineError::Dimension("perturbed systems changed dimension".into()));
    }
    let pc = lap_match(nominal, control);
    let pa = lap_match(nominal, all);
    Ok((0..nominal.len())
        .map(|i| {
            let dc = (nominal.values[i] - control.values[pc[i]]).norm();
            let da = (nominal.values[i] - all.values[pa[i]]).norm();
            let label = if dc >= eps_move {
                EigenLabel::Cdv
            } else if da >= eps_move {
                EigenLabel::Cdi
            } else {
                EigenLabel::Di
            };
            let near = |d: f64| d >= eps_move && d <= 2.0 * eps_move;
            EigenClass { label, control_displacement: dc, all_displacement: da, ambiguous: near(dc) || near(da) }
        })
        .collect())
}

/// Builds the nominal and two perturbed systems through `solve` and
/// classifies the nominal eigenvalues.
pub fn classify<F>(solve: F, opts: ClassifyOptions) -> Result<(EigenSet, Vec<EigenClass>)>
where
    F: Fn(Perturbation) -> Result<EigenSet>,
{
    let nominal = solve(Perturbation::Nominal)?;
    let control = solve(Perturbation::Control(opts.delta))?;
    let all = solve(Perturbation::All(opts.delta))?;
    let eps = opts.eps_rel * nominal.a_norm;
    let classes = classify_sets(&nominal, &control, &all, eps)?;
    Ok((nominal, classes))
}

/// Count of each label.
pub fn census(classes: &[EigenClass]) -> [(EigenLabel, usize); 3] {
    let n = |l| classes.iter().filter(|c| c.label == l).count();
    [(EigenLabel::Cdv, n(EigenLabel::Cdv)), (EigenLabel::Cdi, n(EigenLabel::Cdi)), (EigenLabel::Di, n(EigenLabel::Di))]
}

/// Eigenvalues sharing a label and a real part: the shifted copies of one
/// mode across harmonic orders, together with their conjugates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    pub label: EigenLabel,
    pub real: f64,
    pub members: Vec<usize>,
}

/// Groups labelled eigenvalues into sets whose real parts agree within
/// `tol`. Sets are ordered by label, then by real part.
pub fn label_sets(es: &EigenSet, classes: &[EigenClass], tol: f64) -> Vec<LabelSet> {
    let mut order: Vec<usize> = (0..es.len().min(classes.len())).collect();
    order.sort_by(|&a, &b| classes[a].label.cmp(&classes[b].label).then(es.values[a].re.total_cmp(&es.values[b].re)));
    let mut sets: Vec<LabelSet> = Vec::new();
    for i in order {
        let (label, re) = (classes[i].label, es.values[i].re);
        match sets.last_mut() {
            Some(s) if s.label == label && (re - s.real).abs() <= tol => s.members.push(i),
            _ => sets.push(LabelSet { label, real: re, members: vec![i] }),
        }
    }
    sets
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SetCensus {
    #[serde(rename = "CDV_sets")]
    pub cdv_sets: usize,
    #[serde(rename = "CDI_sets")]
    pub cdi_sets: usize,
    #[serde(rename = "DI_pairs")]
    pub di_sets: usize,
}

pub fn set_census(sets: &[LabelSet]) -> SetCensus {
    let n = |l| sets.iter().filter(|s| s.label == l).count();
    SetCensus { cdv_sets: n(EigenLabel::Cdv), cdi_sets: n(EigenLabel::Cdi), di_sets: n(EigenLabel::Di) }
}
