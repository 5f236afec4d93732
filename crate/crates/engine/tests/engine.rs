use faer::Mat;
use hsa_engine::*;
use hsa_harmonic::{Coord, Domain, FrequencyShiftOperator, LiftedLabel, Signal, C64};
use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn cmat(n: usize, f: impl FnMut(usize, usize) -> C64) -> Mat<C64> {
    Mat::from_fn(n, n, f)
}

/// All permutations of `0..n` in lexicographic order.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                rec(cur, used, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

fn brute_force(cost: &Mat<f64>) -> (f64, Vec<usize>) {
    let n = cost.nrows();
    let mut best = (f64::INFINITY, vec![]);
    for p in permutations(n) {
        let s: f64 = p.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
        if s < best.0 - 1e-12 {
            best = (s, p);
        }
    }
    best
}

#[test]
fn eigensolve_examples() {
    let d = cmat(3, |i, j| if i == j { c(i as f64 - 1.0, 2.0 * i as f64) } else { c(0.0, 0.0) });
    let es = eigensolve_matrix(&d, vec![], true).unwrap();
    assert_eq!(es.values.len(), 3);
    for (l, want) in es.values.iter().zip([c(-1.0, 0.0), c(0.0, 2.0), c(1.0, 4.0)]) {
        assert!((l - want).norm() < 1e-12);
    }
    let n_hat = FrequencyShiftOperator::from_ranges(50.0, &[1]).matrix();
    let es = eigensolve_matrix(&n_hat, vec![], false).unwrap();
    let w = 100.0 * PI;
    for (l, want) in es.values.iter().zip([c(0.0, -w), c(0.0, 0.0), c(0.0, w)]) {
        assert!((l - want).norm() < 1e-9);
    }
    // s² + 2s + 2
    let comp = cmat(2, |i, j| match (i, j) {
        (0, 1) => c(1.0, 0.0),
        (1, 0) => c(-2.0, 0.0),
        (1, 1) => c(-2.0, 0.0),
        _ => c(0.0, 0.0),
    });
    let es = eigensolve_matrix(&comp, vec![], true).unwrap();
    assert!((es.values[0] - c(-1.0, -1.0)).norm() < 1e-12);
    assert!((es.values[1] - c(-1.0, 1.0)).norm() < 1e-12);
}

#[test]
fn eigensolve_rejects_non_finite() {
    let m = cmat(2, |i, j| if i == j { c(f64::NAN, 0.0) } else { c(0.0, 0.0) });
    assert!(matches!(eigensolve_matrix(&m, vec![], false), Err(EngineError::NonFinite)));
}

#[test]
fn residuals_and_damping() {
    let mut rng = StdRng::seed_from_u64(7);
    let m = cmat(30, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let es = eigensolve_matrix(&m, vec![], true).unwrap();
    assert!(es.max_residual < 1e-10 * es.a_norm);
    for w in es.values.windows(2) {
        assert!(canonical_cmp(&w[0], &w[1]).is_le());
    }
    for z in es.damping() {
        assert!((-1.0..=1.0).contains(&z));
    }
    assert_eq!(damping(c(0.0, 0.0)), 1.0);
    assert!((damping(c(-1.0, 1.0)) - 1.0 / 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn lap_matches_brute_force_on_random_instances() {
    let mut rng = StdRng::seed_from_u64(2024);
    for trial in 0..1000 {
        let n = 1 + trial % 8;
        let a: Vec<C64> = (0..n).map(|_| c(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0))).collect();
        let b: Vec<C64> = (0..n).map(|_| c(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0))).collect();
        let cost = Mat::from_fn(n, n, |i, j| (a[i] - b[j]).norm());
        let p = lap_match_values(&a, &b);
        let (best, bp) = brute_force(&cost);
        let s: f64 = p.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
        assert!((s - best).abs() < 1e-9, "trial {trial}");
        assert_eq!(p, bp, "trial {trial}");
    }
}

#[test]
fn lap_identity_and_swap() {
    let a = vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 3.0)];
    assert_eq!(lap_match_values(&a, &a), vec![0, 1, 2]);
    let b = vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 3.0)];
    assert_eq!(lap_match_values(&a, &b), vec![1, 0, 2]);
}

#[test]
fn lap_tie_break_is_lexicographic() {
    // Every permutation is optimal: expect the identity.
    let cost = Mat::from_fn(4, 4, |_, _| 1.0);
    assert_eq!(lap_solve(&cost), vec![0, 1, 2, 3]);
    // Two optima: [0,1] and [1,0] both cost 2.
    let a = vec![c(0.0, 1.0), c(0.0, -1.0)];
    let b = vec![c(-1.0, 0.0), c(1.0, 0.0)];
    assert_eq!(lap_match_values(&a, &b), vec![0, 1]);
    // Integer costs with many ties against the enumeration oracle.
    let mut rng = StdRng::seed_from_u64(99);
    for _ in 0..300 {
        let n = rng.gen_range(1..=6);
        let cost = Mat::from_fn(n, n, |_, _| rng.gen_range(0..3) as f64);
        let (_, bp) = brute_force(&cost);
        assert_eq!(lap_solve(&cost), bp);
    }
}

#[test]
fn closest_subset_recovers_embedded_set() {
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..100 {
        let n = rng.gen_range(1..=6);
        let lti: Vec<C64> = (0..n).map(|_| c(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0))).collect();
        let mut ltp: Vec<C64> = (0..2 * n + 1).map(|_| c(rng.gen_range(100.0..200.0), rng.gen_range(100.0..200.0))).collect();
        let slots: Vec<usize> = (0..n).map(|i| 2 * i + 1).collect();
        for (i, &s) in slots.iter().enumerate() {
            ltp[s] = lti[i];
        }
        let m = closest_subset(&lti, &ltp);
        assert_eq!(m.indices, slots);
        let (d, _) = similarity_metric(&lti, &ltp);
        assert_eq!(d, 0.0);
    }
}

#[test]
fn closest_subset_square_reduces_to_lap() {
    let a = vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 3.0)];
    let b = vec![c(1.1, 0.0), c(0.0, 2.9), c(0.1, 0.0)];
    assert_eq!(closest_subset(&a, &b).indices, lap_match_values(&a, &b));
}

#[test]
fn closest_subset_margin_flags_equidistant() {
    let lti = vec![c(0.0, 0.0)];
    let ltp = vec![c(1.0, 0.0), c(-1.0, 0.0), c(10.0, 0.0)];
    let m = closest_subset(&lti, &ltp);
    assert!(m.margin.abs() < 1e-12);
    let ltp = vec![c(1.0, 0.0), c(-3.0, 0.0)];
    assert!((closest_subset(&lti, &ltp).margin - 2.0).abs() < 1e-12);
}

#[test]
fn similarity_uses_one_norm() {
    let lti = vec![c(-1.0, 2.0), c(-5.0, 0.0)];
    let ltp = vec![c(-5.0, 0.0), c(2.0, 6.0), c(-100.0, 0.0)];
    let (d, _) = similarity_metric(&lti, &ltp);
    assert!((d - 7.0).abs() < 1e-12);
}

#[test]
fn classification_labels() {
    let nominal = EigenSet::from_values(vec![c(-1.0, 0.0), c(-2.0, 5.0), c(0.0, 3.0)]);
    let control = EigenSet::from_values(vec![c(-1.0, 0.0), c(-2.2, 5.0), c(0.0, 3.0)]);
    let all = EigenSet::from_values(vec![c(-1.1, 0.0), c(-2.2, 5.0), c(0.0, 3.0)]);
    let cl = classify_sets(&nominal, &control, &all, 1e-6).unwrap();
    let by = |v: C64| cl[nominal.values.iter().position(|x| *x == v).unwrap()].label;
    assert_eq!(by(c(-1.0, 0.0)), EigenLabel::Cdi);
    assert_eq!(by(c(-2.0, 5.0)), EigenLabel::Cdv);
    assert_eq!(by(c(0.0, 3.0)), EigenLabel::Di);
    let ambiguous = EigenSet::from_values(vec![c(-1.0 - 1.5e-6, 0.0), c(-2.2, 5.0), c(0.0, 3.0)]);
    let cl = classify_sets(&nominal, &ambiguous, &all, 1e-6).unwrap();
    assert!(cl.iter().any(|x| x.ambiguous));
}

#[test]
fn classify_with_builder() {
    // 2x2 system: one "hardware" pole fixed by control, one control pole.
    let solve = |p: Perturbation| {
        let (kc, kh) = match p {
            Perturbation::Nominal => (1.0, 1.0),
            Perturbation::Control(d) => (1.0 + d, 1.0),
            Perturbation::All(d) => (1.0 + d, 1.0 + d),
        };
        let m = cmat(3, |i, j| match (i, j) {
            (0, 0) => c(-3.0 * kh, 0.0),
            (1, 1) => c(-7.0 * kc, 0.0),
            _ => c(0.0, 0.0),
        });
        eigensolve_matrix(&m, vec![], false)
    };
    let (es, cl) = classify(solve, ClassifyOptions::default()).unwrap();
    let label = |v: f64| cl[es.values.iter().position(|x| (x.re - v).abs() < 1e-12).unwrap()].label;
    assert_eq!(label(-3.0), EigenLabel::Cdi);
    assert_eq!(label(-7.0), EigenLabel::Cdv);
    assert_eq!(label(0.0), EigenLabel::Di);
    assert_eq!(census(&cl)[0], (EigenLabel::Cdv, 1));
}

#[test]
fn schedules() {
    let up = Schedule { relative_step: 0.01, steps: 70, kind: StepKind::RelativeToInitial };
    let v = up.values(5.0);
    assert_eq!(v.len(), 71);
    assert!((v[70] - 8.5).abs() < 1e-12);
    let down = Schedule { relative_step: -0.01, steps: 18, kind: StepKind::RelativeToPrevious };
    let v = down.values(2.0);
    assert!((v[18] - 2.0 * 0.99f64.powi(18)).abs() < 1e-12);
}

fn diag_solver(k: f64) -> Result<EigenSet> {
    // Pole pair moving right with k, one fixed pole at 0 (artefact).
    let m = cmat(3, |i, j| match (i, j) {
        (0, 0) => c(-1.0 + k, 4.0),
        (1, 1) => c(-1.0 + k, -4.0),
        _ => c(0.0, 0.0),
    });
    eigensolve_matrix(&m, vec![], false)
}

#[test]
fn sweep_and_margin() {
    let zero = Schedule { relative_step: 0.1, steps: 0, kind: StepKind::RelativeToInitial };
    let t = sensitivity_sweep("k", 0.2, &zero, 1, diag_solver);
    assert_eq!(t.n_steps(), 1);
    let sched = Schedule { relative_step: 1.0, steps: 6, kind: StepKind::RelativeToInitial };
    // k = 0.2·(1 + s): 0.2, 0.4, …, 1.4; Re = k − 1 crosses zero at step 4.
    for threads in [1, 3] {
        let t = sensitivity_sweep("k", 0.2, &sched, threads, diag_solver);
        assert!(t.aborted.is_none());
        let mask = spurious_mask(&t.steps[0], 1e-12);
        assert_eq!(mask.iter().filter(|m| **m).count(), 1);
        assert_eq!(stability_margin(&t, &mask), Some(4));
        // Without the exclusion the zero pole trips step 0.
        assert_eq!(stability_margin(&t, &[]), Some(0));
        let locus = t.locus(t.steps[0].values.iter().position(|l| l.im > 0.0).unwrap());
        assert!(locus.windows(2).all(|w| w[1].re > w[0].re && (w[1].im - 4.0).abs() < 1e-12));
    }
    let stable = Schedule { relative_step: 0.1, steps: 3, kind: StepKind::RelativeToPrevious };
    let t = sensitivity_sweep("k", 0.1, &stable, 2, diag_solver);
    assert_eq!(stability_margin(&t, &spurious_mask(&t.steps[0], 1e-12)), None);
}

#[test]
fn sweep_abort_keeps_partial_trace() {
    let sched = Schedule { relative_step: 1.0, steps: 4, kind: StepKind::RelativeToInitial };
    let t = sensitivity_sweep("k", 1.0, &sched, 1, |k| {
        if k > 2.5 {
            Err(EngineError::NonFinite)
        } else {
            diag_solver(k)
        }
    });
    assert_eq!(t.n_steps(), 2);
    assert_eq!(t.aborted.as_ref().unwrap().0, 2);
}

#[test]
fn label_sets_group_copies_by_real_part() {
    let es = EigenSet::from_values(vec![c(-3.0, -10.0), c(-3.0, 10.0), c(-2.0, 0.0), c(-1.0, 5.0), c(0.0, 314.0), c(0.0, -314.0)]);
    let lab = |l| EigenClass { label: l, control_displacement: 0.0, all_displacement: 0.0, ambiguous: false };
    let classes: Vec<EigenClass> = es
        .values
        .iter()
        .map(|v| match v.re {
            r if r == 0.0 => lab(EigenLabel::Di),
            r if r == -2.0 => lab(EigenLabel::Cdi),
            _ => lab(EigenLabel::Cdv),
        })
        .collect();
    let sets = label_sets(&es, &classes, 1e-9);
    assert_eq!(sets.len(), 4);
    assert_eq!(set_census(&sets), SetCensus { cdv_sets: 2, cdi_sets: 1, di_sets: 1 });
    assert_eq!(sets.iter().find(|s| s.real == -3.0).unwrap().members.len(), 2);
    let json = serde_json::to_string(&set_census(&sets)).unwrap();
    assert_eq!(json, r#"{"CDV_sets":2,"CDI_sets":1,"DI_pairs":1}"#);
}

#[test]
fn edge_mask_flags_truncation_copies() {
    // h_abc = 2: DQ orders −3..3, ABC orders −2..2, diagonal so every
    // eigenvector sits on a single lifted state.
    let sw = |coord| Signal::new("x", coord, Domain::Software);
    let hw = |coord| Signal::new("i", coord, Domain::Hardware);
    let mut labels = Vec::new();
    for h in -3..=3 {
        labels.push(LiftedLabel { signal: sw(Coord::D), order: h });
    }
    for coord in [Coord::A, Coord::B, Coord::C] {
        for h in -2..=2 {
            labels.push(LiftedLabel { signal: hw(coord), order: h });
        }
    }
    let n = labels.len();
    let m = cmat(n, |i, j| if i == j { c(-(i as f64) - 1.0, 0.0) } else { c(0.0, 0.0) });
    let es = eigensolve_matrix(&m, labels.clone(), true).unwrap();
    let mask = edge_mask(&es, 2, 1e-4).unwrap();
    for (k, v) in es.values.iter().enumerate() {
        let l = &labels[(-v.re - 1.0).round() as usize];
        let expected = match l.signal.coord {
            Coord::D => l.order.abs() >= 2,
            // A single phase has all three sequences: order 0 stays interior.
            _ => l.order != 0,
        };
        assert_eq!(mask[k], expected, "{l:?}");
    }
    let w = edge_weights(&EigenSet::from_values(vec![c(-1.0, 0.0)]), 2);
    assert!(w.is_err());
}

#[test]
fn masked_margin_uses_per_step_masks() {
    let sched = Schedule { relative_step: 1.0, steps: 6, kind: StepKind::RelativeToInitial };
    let t = sensitivity_sweep("k", 0.2, &sched, 1, diag_solver);
    let masks: Vec<Vec<bool>> = t.steps.iter().map(|s| s.values.iter().map(|l| l.im == 0.0).collect()).collect();
    assert_eq!(stability_margin_masked(&t, &masks), Some(4));
    assert_eq!(stability_margin_masked(&t, &[]), Some(0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn lap_is_a_bijection_and_optimal(seed in 0u64..10_000, n in 1usize..=7) {
        let mut rng = StdRng::seed_from_u64(seed);
        let cost = Mat::from_fn(n, n, |_, _| rng.gen_range(0.0..10.0));
        let p = lap_solve(&cost);
        let mut seen = p.clone();
        seen.sort();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        let (best, _) = brute_force(&cost);
        let s: f64 = p.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
        prop_assert!((s - best).abs() < 1e-9);
    }

    #[test]
    fn similarity_symmetric_under_relabeling(seed in 0u64..10_000) {
        let mut rng = StdRng::seed_from_u64(seed);
        let lti: Vec<C64> = (0..4).map(|_| c(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0))).collect();
        let ltp: Vec<C64> = (0..7).map(|_| c(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0))).collect();
        let (d, _) = similarity_metric(&lti, &ltp);
        let (mut l2, mut p2) = (lti.clone(), ltp.clone());
        l2.reverse();
        p2.rotate_left(3);
        let (d2, _) = similarity_metric(&l2, &p2);
        prop_assert!((d - d2).abs() < 1e-12);
    }
}
