use faer::linalg::solvers::Solve;
use faer::Mat;
use hsa_grid::*;
use hsa_harmonic::{HarmonicIndexSet, HarmonicLimits, C64};
use proptest::prelude::*;
use std::f64::consts::PI;

fn eig(a: &Mat<C64>) -> Vec<C64> {
    a.eigenvalues().unwrap()
}

fn real_to_c(a: &Mat<f64>) -> Mat<C64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| C64::new(a[(i, j)], 0.0))
}

#[test]
fn thevenin_examples() {
    let (r, x) = thevenin_from_sc(230.0, 3.85e6, 0.271).unwrap();
    let z = (r * r + x * x).sqrt();
    assert!((z - 13.7e-3).abs() / 13.7e-3 < 0.01, "{z}");
    assert!((r / x - 0.271).abs() < 1e-12);
    // Resource-analysis column: 230²/267 kW = 198.1 mΩ.
    let (r, x) = thevenin_from_sc(230.0, 267e3, 6.207).unwrap();
    assert!(((r * r + x * x).sqrt() - 230.0 * 230.0 / 267e3).abs() < 1e-12);
    let (r, x) = thevenin_from_sc(230.0, 267e3, 1e9).unwrap();
    assert!((r - 230.0 * 230.0 / 267e3).abs() < 1e-9 && x < 1e-9);
    assert!(thevenin_from_sc(230.0, 0.0, 1.0).is_err());
}

#[test]
fn sequence_round_trip() {
    let seg = LineSegment::from_per_km(SequenceParameters::table_vi(), 30.0).unwrap();
    let p = seg.params;
    for (m, pos, zero) in [(seg.resistance(), p.r_pos, p.r_zero), (seg.inductance(), p.l_pos, p.l_zero)] {
        let (a, b) = phase_to_sequence(&m);
        assert!((a - pos).abs() <= 1e-12 * pos);
        assert!((b - zero).abs() <= 1e-12 * zero);
    }
    assert!((p.r_pos - 0.162 * 0.03).abs() < 1e-15);
}

#[test]
fn balanced_and_zero_sequence_excitation() {
    let seg = LineSegment::from_per_km(SequenceParameters::table_vi(), 30.0).unwrap();
    let r = seg.resistance();
    let bal = [1.0, (-2.0 * PI / 3.0).cos(), (2.0 * PI / 3.0).cos()];
    for i in 0..3 {
        let v: f64 = (0..3).map(|j| r[(i, j)] * bal[j]).sum();
        assert!((v - seg.params.r_pos * bal[i]).abs() < 1e-15);
        let z: f64 = (0..3).map(|j| r[(i, j)]).sum();
        assert!((z - seg.params.r_zero).abs() < 1e-15);
    }
}

#[test]
fn emf_spectrum_matches_time_function() {
    let te = TheveninEquivalent::system_analysis();
    let idx = HarmonicIndexSet::new(25, 50.0).unwrap();
    let s = te.emf_spectrum(idx);
    assert!(s.is_conjugate_symmetric(1e-9));
    for th in [0.0, 0.4, 2.0, 5.1] {
        let e = te.emf(th);
        for x in 0..3 {
            assert!((s.eval_angle(x, th).re - e[x]).abs() < 1e-9);
        }
    }
    // 5th is negative sequence: phase B leads phase A by 2π/3.
    let (a, b) = (s.get(0, 5), s.get(1, 5));
    let d = (b / a).arg();
    assert!((d - 2.0 * PI / 3.0).abs() < 1e-9, "{d}");
}

#[test]
fn topology_validation() {
    let te = TheveninEquivalent::system_analysis();
    let mut t = NetworkTopology::test_system(te.clone()).unwrap();
    t.branches.pop();
    assert!(matches!(t.validate(), Err(GridError::Disconnected(n)) if n == "N05"));
    let mut t = NetworkTopology::test_system(te.clone()).unwrap();
    t.attachments[0].node = "N99".into();
    assert!(t.validate().is_err());
    // Following resource at a capless node has no voltage output.
    let t = NetworkTopology::single_resource(te.clone(), AttachmentKind::Following).unwrap();
    assert!(GridModel::build(&t).is_err());
    let t = NetworkTopology::single_resource(te, AttachmentKind::Forming).unwrap();
    assert!(GridModel::build(&t).is_ok());
}

#[test]
fn test_system_dimensions_and_passivity() {
    let t = NetworkTopology::test_system(TheveninEquivalent::system_analysis()).unwrap();
    let g = GridModel::build(&t).unwrap();
    // i_te + 4 lines + 5 nodes
    assert_eq!(g.states.len(), 30);
    assert_eq!(g.inputs.len(), 9);
    assert_eq!(g.outputs.len(), 6);
    let ev = eig(&real_to_c(&g.a));
    assert!(ev.iter().all(|l| l.re < 0.0));
    // Oscillatory grid modes sit well above 1 kHz.
    let max_im = ev.iter().map(|l| l.im).fold(0.0, f64::max);
    assert!(max_im > 2.0 * PI * 1e3, "{max_im}");
}

#[test]
fn single_line_open_circuit_dc_gain() {
    let te = TheveninEquivalent::system_analysis();
    let seg = LineSegment::from_per_km(SequenceParameters::table_vi(), 30.0).unwrap();
    let t = NetworkTopology {
        nodes: vec!["N01".into(), "N02".into()],
        branches: vec![Branch { from: "N01".into(), to: "N02".into(), segment: seg }],
        source_node: "N01".into(),
        source: te,
        attachments: vec![Attachment { name: "end".into(), node: "N02".into(), kind: AttachmentKind::Following }],
    };
    let g = GridModel::build(&t).unwrap();
    let ev = eig(&real_to_c(&g.a));
    assert!(ev.iter().all(|l| l.re < 0.0));
    // y = −C A⁻¹ B e with zero drawn current.
    let x = g.a.partial_piv_lu().solve(&g.b);
    let gain = -(&g.c * &x);
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((gain[(i, j)] - want).abs() < 1e-9);
        }
    }
}

#[test]
fn lifted_grid_is_shifted_copy() {
    let t = NetworkTopology::test_system(TheveninEquivalent::system_analysis()).unwrap();
    let g = GridModel::build(&t).unwrap();
    let mut base = eig(&real_to_c(&g.a));
    let limits = HarmonicLimits::new(50.0, 2).unwrap();
    let hss = grid_hss(&t, &limits).unwrap();
    let lifted = eig(&hss.a_tilde);
    assert_eq!(lifted.len(), 5 * base.len());
    let w = 2.0 * PI * 50.0;
    let mut expect = Vec::new();
    for h in -2..=2 {
        expect.extend(base.iter().map(|l| l - C64::new(0.0, h as f64 * w)));
    }
    base.clear();
    for l in &lifted {
        let d = expect.iter().map(|e| (e - l).norm()).fold(f64::INFINITY, f64::min);
        assert!(d < 1e-6 * l.norm().max(1.0), "{l}");
    }
}

#[test]
fn topology_serde_round_trip() {
    let t = NetworkTopology::test_system(TheveninEquivalent::system_analysis()).unwrap();
    let j = serde_json::to_string(&t).unwrap();
    let back: NetworkTopology = serde_json::from_str(&j).unwrap();
    assert_eq!(back, t);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn passive_for_positive_parameters(
        rp in 0.01f64..1.0, r0 in 0.01f64..2.0,
        lp in 1e-4f64..2e-3, l0 in 1e-4f64..4e-3,
        cp in 1e-7f64..1e-6, c0 in 1e-7f64..1e-6,
        len in 10.0f64..300.0, rx in 0.1f64..10.0,
    ) {
        let per_km = SequenceParameters { r_pos: rp, r_zero: r0, l_pos: lp, l_zero: l0, c_pos: cp, c_zero: c0 };
        let mut te = TheveninEquivalent::system_analysis();
        te.r_over_x = rx;
        let mut t = NetworkTopology::test_system(te).unwrap();
        for b in &mut t.branches {
            b.segment = LineSegment::from_per_km(per_km, len).unwrap();
        }
        let g = GridModel::build(&t).unwrap();
        let ev = eig(&real_to_c(&g.a));
        prop_assert!(ev.iter().all(|l| l.re < 0.0));
    }

    #[test]
    fn sequence_phase_round_trip(p in 1e-6f64..10.0, z in 1e-6f64..10.0) {
        let (a, b) = phase_to_sequence(&sequence_to_phase(p, z));
        prop_assert!((a - p).abs() <= 1e-12 * p.max(z));
        prop_assert!((b - z).abs() <= 1e-12 * p.max(z));
    }
}
