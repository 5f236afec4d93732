use crate::eigen::EigenSet;
use crate::error::{EngineError, Result};
use hsa_harmonic::{classify_dq_pair, symmetric_components, Coord, DqSequence, Domain, C64, DEFAULT_PAIR_TOLERANCE};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SequenceLabel {
    P,
    N,
    H,
    #[serde(rename = "P'")]
    PPrime,
    #[serde(rename = "N'")]
    NPrime,
    #[serde(rename = "DC")]
    Dc,
    Ambiguous,
}

impl std::fmt::Display for SequenceLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SequenceLabel::P => "P",
            SequenceLabel::N => "N",
            SequenceLabel::H => "H",
            SequenceLabel::PPrime => "P'",
            SequenceLabel::NPrime => "N'",
            SequenceLabel::Dc => "DC",
            SequenceLabel::Ambiguous => "?",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceEntry {
    pub group: String,
    pub domain: Domain,
    pub order: i32,
    pub label: SequenceLabel,
    /// Largest entry magnitude of the group at this order (vector scaled to max 1).
    pub magnitude: f64,
}

/// Per-eigenvalue decomposition of the eigenvector into state groups,
/// harmonic orders and sequences. Entries below `floor` (relative to the
/// largest entry of the vector) are omitted.
pub fn eigenvector_sequence_report(es: &EigenSet, floor: f64) -> Result<Vec<Vec<SequenceEntry>>> {
    let v = es.vectors.as_ref().ok_or_else(|| EngineError::Dimension("eigenvectors not computed".into()))?;
    if es.labels.len() != v.nrows() {
        return Err(EngineError::Dimension("state labels missing".into()));
    }
    let mut out = Vec::with_capacity(es.len());
    for k in 0..es.len() {
        let vmax = (0..v.nrows()).map(|i| v[(i, k)].norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut groups: BTreeMap<(String, i32), (Domain, BTreeMap<Coord, C64>)> = BTreeMap::new();
        for (i, l) in es.labels.iter().enumerate() {
            let e = groups.entry((l.signal.group.clone(), l.order)).or_insert_with(|| (l.signal.domain, BTreeMap::new()));
            e.1.insert(l.signal.coord, v[(i, k)] / vmax);
        }
        let mut entries = Vec::new();
        for ((group, order), (domain, vals)) in groups {
            let magnitude = vals.values().map(|c| c.norm()).fold(0.0, f64::max);
            if magnitude < floor {
                continue;
            }
            let get = |c: Coord| vals.get(&c).copied().unwrap_or_default();
            let label = if vals.contains_key(&Coord::A) {
                let (z, p, n) = symmetric_components([get(Coord::A), get(Coord::B), get(Coord::C)]);
                let mut m = [(SequenceLabel::H, z.norm()), (SequenceLabel::P, p.norm()), (SequenceLabel::N, n.norm())];
                m.sort_by(|a, b| b.1.total_cmp(&a.1));
                if m[1].1 > 1e-3 * m[0].1 {
                    SequenceLabel::Ambiguous
                } else {
                    m[0].0
                }
            } else if vals.contains_key(&Coord::D) {
                match classify_dq_pair(get(Coord::D), get(Coord::Q), DEFAULT_PAIR_TOLERANCE) {
                    Ok(DqSequence::PositivePrime) => SequenceLabel::PPrime,
                    Ok(DqSequence::NegativePrime) => SequenceLabel::NPrime,
                    Ok(DqSequence::Homopolar) => SequenceLabel::H,
                    Err(_) => SequenceLabel::Ambiguous,
                }
            } else {
                SequenceLabel::Dc
            };
            entries.push(SequenceEntry { group, domain, order, label, magnitude });
        }
        out.push(entries);
    }
    Ok(out)
}

/// Domains and state groups in which eigenvector `k` has entries above
/// `floor` relative to its largest entry.
pub fn eigenvector_support(es: &EigenSet, k: usize, floor: f64) -> Result<Vec<(Domain, String)>> {
    let v = es.vectors.as_ref().ok_or_else(|| EngineError::Dimension("eigenvectors not computed".into()))?;
    let vmax = (0..v.nrows()).map(|i| v[(i, k)].norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut s: Vec<(Domain, String)> = es
        .labels
        .iter()
        .enumerate()
        .filter(|(i, _)| v[(*i, k)].norm() / vmax >= floor)
        .map(|(_, l)| (l.signal.domain, l.signal.group.clone()))
        .collect();
    s.sort_by(|a, b| (a.0 as u8, &a.1).cmp(&(b.0 as u8, &b.1)));
    s.dedup();
    Ok(s)
}

/// Largest eigenvector entry attributable to a rotating-frame shift `k`
/// with `|k| ≥ h_abc`, relative to the largest entry, for each eigenvalue.
///
/// A shifted copy `k` of a mode carries DQ content at order `k`, ABC
/// positive sequence at `k + 1`, negative sequence at `k − 1` and homopolar
/// content at `k`. Copies with `|k| ≥ h_abc` lose part of their ABC support to
/// the cut-off, so their eigenvalues are truncation artefacts.
pub fn edge_weights(es: &EigenSet, h_abc: usize) -> Result<Vec<f64>> {
    let v = es.vectors.as_ref().ok_or_else(|| EngineError::Dimension("eigenvectors not computed".into()))?;
    if es.labels.len() != v.nrows() {
        return Err(EngineError::Dimension("state labels missing".into()));
    }
    let hh = h_abc as i32;
    // Triplets of ABC rows grouped by (group, order).
    let mut triplets: BTreeMap<(String, i32), [Option<usize>; 3]> = BTreeMap::new();
    let mut single: Vec<(usize, bool)> = Vec::new();
    for (i, l) in es.labels.iter().enumerate() {
        let slot = match l.signal.coord {
            Coord::A => 0,
            Coord::B => 1,
            Coord::C => 2,
            Coord::Z => {
                single.push((i, l.order.abs() > hh));
                continue;
            }
            _ => {
                single.push((i, l.order.abs() >= hh));
                continue;
            }
        };
        triplets.entry((l.signal.group.clone(), l.order)).or_default()[slot] = Some(i);
    }
    Ok((0..es.len())
        .map(|k| {
            let vmax = (0..v.nrows()).map(|i| v[(i, k)].norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            let mut edge = 0.0f64;
            for &(i, is_edge) in &single {
                if is_edge {
                    edge = edge.max(v[(i, k)].norm());
                }
            }
            for ((_, h), rows) in &triplets {
                let get = |s: usize| rows[s].map(|i| v[(i, k)]).unwrap_or_default();
                let (z, p, n) = symmetric_components([get(0), get(1), get(2)]);
                if (h - 1).abs() >= hh {
                    edge = edge.max(p.norm());
                }
                if (h + 1).abs() >= hh {
                    edge = edge.max(n.norm());
                }
                if h.abs() > hh {
                    edge = edge.max(z.norm());
                }
            }
            edge / vmax
        })
        .collect())
}

/// True for eigenvalues whose edge weight exceeds `floor`.
pub fn edge_mask(es: &EigenSet, h_abc: usize, floor: f64) -> Result<Vec<bool>> {
    Ok(edge_weights(es, h_abc)?.into_iter().map(|w| w > floor).collect())
}
