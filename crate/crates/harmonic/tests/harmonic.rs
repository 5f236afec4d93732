use hsa_harmonic::*;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_real_spectrum(rng: &mut impl Rng, idx: HarmonicIndexSet) -> HarmonicSpectrum {
    let mut s = HarmonicSpectrum::zeros(idx, 1);
    s.set(0, 0, c(rng.gen_range(-1.0..1.0), 0.0));
    for h in 1..=idx.h_max as i32 {
        let v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        s.set(0, h, v);
        s.set(0, -h, v.conj());
    }
    s
}

/// Sampled-product oracle: multiply x(t) y(t) pointwise on a fine grid and
/// take the DFT.
fn product_oracle(x: &HarmonicSpectrum, y: &HarmonicSpectrum) -> HarmonicSpectrum {
    let n = 64;
    let xs = x.sample(0, n);
    let ys = y.sample(0, n);
    let p: Vec<f64> = xs.iter().zip(&ys).map(|(a, b)| a * b).collect();
    HarmonicSpectrum::from_samples(x.index_set(), &[p]).unwrap()
}

#[test]
fn toeplitz_example_matrix() {
    let idx = HarmonicIndexSet::new(1, 50.0).unwrap();
    let x = HarmonicSpectrum::from_fn(idx, 1, |_, h| if h == 0 { c(2.0, 0.0) } else { c(1.0, 0.0) });
    let t = toeplitz_from_spectrum(&x);
    let want = [[2.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 2.0]];
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(t.matrix()[(i, j)], c(want[i][j], 0.0));
        }
    }
}

#[test]
fn toeplitz_of_constant_is_scaled_identity() {
    let idx = HarmonicIndexSet::new(3, 50.0).unwrap();
    let x = HarmonicSpectrum::from_fn(idx, 1, |_, h| if h == 0 { c(2.5, 0.0) } else { c(0.0, 0.0) });
    let t = toeplitz_from_spectrum(&x);
    for i in 0..7 {
        for j in 0..7 {
            assert_eq!(t.matrix()[(i, j)], if i == j { c(2.5, 0.0) } else { c(0.0, 0.0) });
        }
    }
}

#[test]
fn toeplitz_product_matches_fft_oracle_on_interior_orders() {
    // Band-limit both operands to h_max/2 so that no product term falls
    // outside the index set.
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let idx = HarmonicIndexSet::new(4, 50.0).unwrap();
    for _ in 0..50 {
        let mut x = random_real_spectrum(&mut rng, idx);
        let mut y = random_real_spectrum(&mut rng, idx);
        for h in [3, 4, -3, -4] {
            x.set(0, h, c(0.0, 0.0));
            y.set(0, h, c(0.0, 0.0));
        }
        let got = toeplitz_from_spectrum(&x).apply(&y).unwrap();
        let want = product_oracle(&x, &y);
        assert!(got.max_abs_diff(&want).unwrap() < 1e-12);
    }
}

#[test]
fn toeplitz_index_set_mismatch_is_an_error() {
    let x = HarmonicSpectrum::zeros(HarmonicIndexSet::new(2, 50.0).unwrap(), 1);
    let y = HarmonicSpectrum::zeros(HarmonicIndexSet::new(3, 50.0).unwrap(), 1);
    assert!(matches!(toeplitz_from_spectrum(&x).apply(&y), Err(HarmonicError::IndexSetMismatch(_))));
}

#[test]
fn shift_operator_examples() {
    let idx = HarmonicIndexSet::new(1, 50.0).unwrap();
    let n = shift_operator(idx, 1);
    let d = n.diagonal();
    assert!((d[0] - c(0.0, -100.0 * PI)).norm() < 1e-12);
    assert_eq!(d[1], c(0.0, 0.0));
    assert!((d[2] - c(0.0, 100.0 * PI)).norm() < 1e-12);
    let z = shift_operator(HarmonicIndexSet::new(0, 50.0).unwrap(), 3);
    assert!(z.diagonal().iter().all(|v| v.norm() == 0.0));
    let two = shift_operator(idx, 2);
    assert_eq!(two.diagonal().len(), 6);
    assert_eq!(two.diagonal()[3], d[0]);
}

#[test]
fn index_set_rejects_nonpositive_f1() {
    assert!(HarmonicIndexSet::new(3, 0.0).is_err());
    assert!(HarmonicIndexSet::new(3, -1.0).is_err());
    let idx = HarmonicIndexSet::new(3, 50.0).unwrap();
    assert_eq!(idx.orders().collect::<Vec<_>>(), vec![-3, -2, -1, 0, 1, 2, 3]);
}

#[test]
fn sequence_map_examples() {
    let l = HarmonicLimits::new(50.0, 5).unwrap();
    assert_eq!(sequence_map_abc_to_dqz(1, AbcSequence::Positive, &l).unwrap(), Some(0));
    assert_eq!(sequence_map_abc_to_dqz(0, AbcSequence::Homopolar, &l).unwrap(), Some(0));
    assert_eq!(sequence_map_abc_to_dqz(1, AbcSequence::Negative, &l).unwrap(), Some(2));
    assert_eq!(sequence_map_dqz_to_abc(0, DqSequence::PositivePrime, &l).unwrap(), Some(1));
    assert_eq!(sequence_map_dqz_to_abc(6, DqSequence::PositivePrime, &l).unwrap(), None);
    assert_eq!(sequence_map_dqz_to_abc(-6, DqSequence::NegativePrime, &l).unwrap(), None);
    assert!(sequence_map_abc_to_dqz(6, AbcSequence::Positive, &l).is_err());
    assert!(sequence_map_dqz_to_abc(7, DqSequence::Homopolar, &l).is_err());
}

#[test]
fn sequence_map_round_trip() {
    let l = HarmonicLimits::new(50.0, 6).unwrap();
    for h in -6..=6 {
        for (s, sp) in [
            (AbcSequence::Positive, DqSequence::PositivePrime),
            (AbcSequence::Negative, DqSequence::NegativePrime),
            (AbcSequence::Homopolar, DqSequence::Homopolar),
        ] {
            let k = sequence_map_abc_to_dqz(h, s, &l).unwrap().unwrap();
            assert_eq!(sequence_map_dqz_to_abc(k, sp, &l).unwrap(), Some(h));
        }
    }
}

#[test]
fn classify_dq_pair_examples() {
    let t = DEFAULT_PAIR_TOLERANCE;
    assert_eq!(classify_dq_pair(c(1.0, 0.0), c(0.0, -1.0), t).unwrap(), DqSequence::PositivePrime);
    assert_eq!(classify_dq_pair(c(1.0, 0.0), c(0.0, 1.0), t).unwrap(), DqSequence::NegativePrime);
    assert!(matches!(classify_dq_pair(c(1.0, 0.0), c(1.0, 0.0), t), Err(HarmonicError::AmbiguousPair { .. })));
}

#[test]
fn park_lift_reproduces_sequence_maps() {
    // A positive-sequence ABC component at order h lands on DQ order h-1 with
    // q = -j d; negative sequence on h+1 with q = +j d.
    let l = HarmonicLimits::new(50.0, 3).unwrap();
    let t = PeriodicMatrix::park().lift(&[4, 4], &[3, 3, 3]).unwrap();
    let a = C64::from_polar(1.0, 2.0 * PI / 3.0);
    for h in -3..=3i32 {
        for (seq, trip, shift) in [
            (DqSequence::PositivePrime, [c(1.0, 0.0), a * a, a], -1),
            (DqSequence::NegativePrime, [c(1.0, 0.0), a, a * a], 1),
        ] {
            let mut x = vec![c(0.0, 0.0); 21];
            for ph in 0..3 {
                x[ph * 7 + (h + 3) as usize] = trip[ph];
            }
            let y: Vec<C64> = (0..18).map(|i| (0..21).map(|j| t[(i, j)] * x[j]).sum()).collect();
            let k = h + shift;
            let (d, q) = (y[(k + 4) as usize], y[9 + (k + 4) as usize]);
            assert!((d - c(1.0, 0.0)).norm() < 1e-14);
            assert_eq!(classify_dq_pair(d, q, 1e-9).unwrap(), seq);
            let energy: f64 = y.iter().map(|v| v.norm_sqr()).sum();
            assert!((energy - 2.0).abs() < 1e-12);
            let _ = l;
        }
    }
}

#[test]
fn park_inverse_identity_in_time() {
    let p = PeriodicMatrix::park_dqz();
    let pi = PeriodicMatrix::inv_park_dqz();
    let prod = p.mul(&pi).unwrap();
    for k in 0..7 {
        let th = 0.37 * k as f64;
        let m = prod.eval(th);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((m[(i, j)] - c(want, 0.0)).norm() < 1e-14);
            }
        }
        let pv = p.eval_real(th);
        assert!((pv[(0, 0)] - 2.0 / 3.0 * th.cos()).abs() < 1e-15);
        assert!((pv[(1, 1)] + 2.0 / 3.0 * (th - 2.0 * PI / 3.0).sin()).abs() < 1e-15);
    }
}

#[test]
fn spectrum_sampling_round_trip() {
    let idx = HarmonicIndexSet::new(5, 50.0).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(3);
    let s = random_real_spectrum(&mut rng, idx);
    let back = HarmonicSpectrum::from_samples(idx, &[s.sample(0, 32)]).unwrap();
    assert!(s.max_abs_diff(&back).unwrap() < 1e-14);
}

#[test]
fn composite_of_constant_blocks_is_series_connection() {
    // Two first-order lags in series: x1' = -x1 + u, x2' = -2 x2 + x1.
    let s = |g: &str| Signal::new(g, Coord::Dc, Domain::Hardware);
    let lag = |name: &str, p: f64| {
        LtpModel::primitive(
            name,
            vec![s("x")],
            vec![s("u")],
            vec![s("y")],
            PeriodicMatrix::from_rows(1, 1, &[-p]),
            PeriodicMatrix::from_rows(1, 1, &[1.0]),
            PeriodicMatrix::from_rows(1, 1, &[1.0]),
            PeriodicMatrix::from_rows(1, 1, &[0.0]),
        )
        .unwrap()
    };
    let mut c1 = Composite::new("sys");
    let a = c1.add_child(lag("a", 1.0));
    let b = c1.add_child(lag("b", 2.0));
    let w = c1.add_inputs(vec![s("w")]);
    let z = c1.add_outputs(vec![s("z")]);
    c1.feed(w, a, "u", PeriodicMatrix::identity(1)).unwrap();
    c1.connect(a, "y", b, "u", PeriodicMatrix::identity(1)).unwrap();
    c1.expose(b, "y", z, PeriodicMatrix::identity(1)).unwrap();
    let m = c1.build();
    let r = m.eval(0.0).unwrap();
    assert_eq!(r.a[(0, 0)], c(-1.0, 0.0));
    assert_eq!(r.a[(1, 0)], c(1.0, 0.0));
    assert_eq!(r.a[(1, 1)], c(-2.0, 0.0));
    assert_eq!(r.b[(0, 0)], c(1.0, 0.0));
    assert_eq!(r.c[(0, 1)], c(1.0, 0.0));
    assert_eq!(m.states()[0].group, "a.x");
}

#[test]
fn hss_of_constant_model_is_block_diagonal_with_shift() {
    let s = Signal::new("x", Coord::Dc, Domain::Hardware);
    let m = LtpModel::primitive(
        "lag",
        vec![s.clone()],
        vec![],
        vec![],
        PeriodicMatrix::from_rows(1, 1, &[-3.0]),
        PeriodicMatrix::zeros(1, 0),
        PeriodicMatrix::zeros(0, 1),
        PeriodicMatrix::zeros(0, 0),
    )
    .unwrap();
    let l = HarmonicLimits::new(50.0, 2).unwrap();
    let h = HssModel::from_ltp(&m, &l, Provenance::OpenLoopResource).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            let want = if i == j { c(-3.0, -(i as f64 - 2.0) * 100.0 * PI) } else { c(0.0, 0.0) };
            assert!((h.a_tilde[(i, j)] - want).norm() < 1e-12);
        }
    }
}

fn arb_spectrum(h_max: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), h_max + 1)
}

fn spectrum_from(idx: HarmonicIndexSet, v: &[(f64, f64)]) -> HarmonicSpectrum {
    let mut s = HarmonicSpectrum::zeros(idx, 1);
    s.set(0, 0, c(v[0].0, 0.0));
    for h in 1..=idx.h_max {
        s.set(0, h as i32, c(v[h].0, v[h].1));
        s.set(0, -(h as i32), c(v[h].0, -v[h].1));
    }
    s
}

proptest! {
    #[test]
    fn toeplitz_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, x in arb_spectrum(4), y in arb_spectrum(4)) {
        let idx = HarmonicIndexSet::new(4, 50.0).unwrap();
        let (xs, ys) = (spectrum_from(idx, &x), spectrum_from(idx, &y));
        let combo = HarmonicSpectrum::from_fn(idx, 1, |_, h| xs.get(0, h) * a + ys.get(0, h) * b);
        let lhs = toeplitz_from_spectrum(&combo);
        let rhs = toeplitz_from_spectrum(&xs).scaled(c(a, 0.0)).add(&toeplitz_from_spectrum(&ys).scaled(c(b, 0.0))).unwrap();
        for i in 0..9 { for j in 0..9 {
            prop_assert!((lhs.matrix()[(i, j)] - rhs.matrix()[(i, j)]).norm() < 1e-12);
        }}
    }

    #[test]
    fn toeplitz_preserves_conjugate_symmetry(x in arb_spectrum(5), y in arb_spectrum(5)) {
        let idx = HarmonicIndexSet::new(5, 50.0).unwrap();
        let out = toeplitz_from_spectrum(&spectrum_from(idx, &x)).apply(&spectrum_from(idx, &y)).unwrap();
        prop_assert!(out.is_conjugate_symmetric(1e-12));
    }

    #[test]
    fn convolution_oracle_interior(h_max in 2usize..=6, x in arb_spectrum(6), y in arb_spectrum(6)) {
        let idx = HarmonicIndexSet::new(h_max, 50.0).unwrap();
        let xs = spectrum_from(idx, &x[..=h_max]);
        let ys = spectrum_from(idx, &y[..=h_max]);
        let got = toeplitz_from_spectrum(&xs).apply(&ys).unwrap();
        // Oracle on a wider index set so that nothing folds back; every order
        // kept by the Toeplitz product must agree exactly.
        let wide = idx.with_h_max(2 * h_max);
        let want = product_oracle(&xs.reindexed(wide), &ys.reindexed(wide)).reindexed(idx);
        prop_assert!(got.max_abs_diff(&want).unwrap() < 1e-10);
    }
}
