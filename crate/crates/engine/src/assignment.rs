use crate::eigen::EigenSet;
use faer::Mat;
use hsa_harmonic::C64;
use std::collections::VecDeque;

/// Rectangular Hungarian algorithm (rows ≤ cols). Returns the column of each
/// row and the dual potentials `(u, v)` with `c_ij − u_i − v_j ≥ 0`.
fn hungarian(cost: &Mat<f64>) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let (n, m) = (cost.nrows(), cost.ncols());
    assert!(n <= m, "hungarian needs rows <= cols");
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    (assign, u[1..].to_vec(), v[1..].to_vec())
}

/// Exact minimum-cost permutation of a square cost matrix; `perm[i]` is the
/// column assigned to row `i`. Among optimal permutations the
/// lexicographically smallest is returned.
pub fn lap_solve(cost: &Mat<f64>) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "square cost matrix expected");
    if n == 0 {
        return vec![];
    }
    let (mut perm, u, v) = hungarian(cost);
    let scale = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| cost[(i, j)].abs()).fold(0.0, f64::max);
    let tol = 1e-12 * (1.0 + scale) * n as f64;
    let tight = |i: usize, j: usize| cost[(i, j)] - u[i] - v[j] <= tol;
    let mut owner = vec![0usize; n];
    for (i, &j) in perm.iter().enumerate() {
        owner[j] = i;
    }
    let mut fixed_col = vec![false; n];
    for i in 0..n {
        for j in 0..perm[i] {
            if fixed_col[j] || !tight(i, j) {
                continue;
            }
            // Give column j to row i; its previous owner must reach the
            // column released by i along tight alternating edges.
            let (r, target) = (owner[j], perm[i]);
            let mut prev_col = vec![usize::MAX; n];
            let mut seen_row = vec![false; n];
            let mut q = VecDeque::from([r]);
            seen_row[r] = true;
            seen_row[i] = true;
            let mut found = false;
            'bfs: while let Some(row) = q.pop_front() {
                for c in 0..n {
                    if fixed_col[c] || c == j || prev_col[c] != usize::MAX || !tight(row, c) {
                        continue;
                    }
                    prev_col[c] = row;
                    if c == target {
                        found = true;
                        break 'bfs;
                    }
                    let nr = owner[c];
                    if !seen_row[nr] {
                        seen_row[nr] = true;
                        q.push_back(nr);
                    }
                }
            }
            if found {
                let mut c = target;
                loop {
                    let row = prev_col[c];
                    let old = perm[row];
                    perm[row] = c;
                    owner[c] = row;
                    if row == r {
                        break;
                    }
                    c = old;
                }
                perm[i] = j;
                owner[j] = i;
                break;
            }
        }
        fixed_col[perm[i]] = true;
    }
    perm
}

fn distance_matrix(a: &[C64], b: &[C64]) -> Mat<f64> {
    Mat::from_fn(a.len(), b.len(), |i, j| (a[i] - b[j]).norm())
}

/// Matches `candidate` to `reference`: `perm[i]` is the candidate index
/// paired with reference eigenvalue `i`, minimising `Σ|λ_ref − λ_cand|`.
pub fn lap_match(reference: &EigenSet, candidate: &EigenSet) -> Vec<usize> {
    lap_match_values(&reference.values, &candidate.values)
}

pub fn lap_match_values(reference: &[C64], candidate: &[C64]) -> Vec<usize> {
    assert_eq!(reference.len(), candidate.len(), "lap_match needs equal cardinality");
    lap_solve(&distance_matrix(reference, candidate))
}

#[derive(Debug, Clone)]
pub struct SubsetMatch {
    /// Index into the larger set for every element of the smaller one.
    pub indices: Vec<usize>,
    /// Distance `|λ_LTI − λ_LTP|` of each matched pair.
    pub distances: Vec<f64>,
    /// Smallest gap between the assigned and the next-nearest candidate over
    /// all rows. Near zero means the matching may be ambiguous.
    pub margin: f64,
}

/// The `n_LTI` eigenvalues of the larger set closest to the smaller set, as a
/// rectangular assignment.
pub fn closest_subset(lti: &[C64], ltp: &[C64]) -> SubsetMatch {
    assert!(ltp.len() >= lti.len(), "closest_subset needs n_LTP >= n_LTI");
    let cost = distance_matrix(lti, ltp);
    let indices = if lti.len() == ltp.len() { lap_solve(&cost) } else { hungarian(&cost).0 };
    let distances: Vec<f64> = indices.iter().enumerate().map(|(i, &j)| cost[(i, j)]).collect();
    let margin = (0..lti.len())
        .map(|i| {
            let next = (0..ltp.len()).filter(|&j| j != indices[i]).map(|j| cost[(i, j)]).fold(f64::INFINITY, f64::min);
            next - distances[i]
        })
        .fold(f64::INFINITY, f64::min);
    SubsetMatch { indices, distances, margin }
}

/// `d = max_i |λ_i,LTI − λ_i,LTP|₁` over the closest subset, with the
/// 1-norm `|Re| + |Im|`.
pub fn similarity_metric(lti: &[C64], ltp: &[C64]) -> (f64, SubsetMatch) {
    let m = closest_subset(lti, ltp);
    let d = m
        .indices
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            let z = lti[i] - ltp[j];
            z.re.abs() + z.im.abs()
        })
        .fold(0.0, f64::max);
    (d, m)
}
