use hsa_cider::{CiderSpec, OperatingPoint, ParamPath};
use hsa_engine::{edge_mask, eigensolve, eigenvalues, lap_match_values};
use hsa_grid::{NetworkTopology, TheveninEquivalent};
use hsa_harmonic::HarmonicLimits;
use hsa_system::*;

fn test_system() -> SystemDescription {
    SystemDescription::test_system(TheveninEquivalent::system_analysis()).unwrap()
}

fn limits(h: usize) -> HarmonicLimits {
    HarmonicLimits::new(50.0, h).unwrap()
}

fn fundamental_ops(op: &SystemOperatingPoint, sys: &SystemDescription) -> OperatingPoints {
    op.cider_ops(sys).unwrap().into_iter().map(|(k, o)| (k, o.fundamental_only())).collect()
}

#[test]
fn test_system_description() {
    let sys = test_system();
    assert_eq!(sys.ciders.len(), 2);
    let k = sys.cider("n04").unwrap().spec.param(ParamPath::parse("alpha.k_fb").unwrap()).unwrap();
    assert_eq!(k, 16.0);
    let json = serde_json::to_string(&sys).unwrap();
    let back: SystemDescription = serde_json::from_str(&json).unwrap();
    assert_eq!(back, sys);
}

#[test]
fn forming_resource_at_following_attachment_is_rejected() {
    let mut sys = test_system();
    sys.ciders[1].spec = CiderSpec::default_forming();
    assert!(matches!(sys.validate(), Err(SystemError::PortMismatch(_))));
    let mut sys = test_system();
    sys.ciders.pop();
    assert!(sys.validate().is_err());
}

#[test]
fn zero_distortion_power_flow_has_only_the_fundamental() {
    let sys = test_system();
    let op = harmonic_power_flow(&sys, &limits(3), HpfMode::ZeroDistortion, &HpfOptions::default()).unwrap();
    assert!(op.report.converged);
    assert!(op.flags.is_empty());
    for n in ["N01", "N02", "N03", "N04", "N05"] {
        let v1 = op.voltage_pu(n, 0, 1).unwrap();
        assert!((0.95..1.05).contains(&v1), "{n}: {v1}");
        for h in [0, 2, 3] {
            assert!(op.voltage_pu(n, 0, h).unwrap() < 1e-10);
        }
    }
    // Exporting resources raise the voltage along the feeder.
    assert!(op.voltage_pu("N05", 0, 1).unwrap() > op.voltage_pu("N01", 0, 1).unwrap());
}

#[test]
fn power_flow_is_deterministic() {
    let sys = test_system();
    let a = harmonic_power_flow(&sys, &limits(7), HpfMode::WithHarmonics, &HpfOptions::default()).unwrap();
    let b = harmonic_power_flow(&sys, &limits(7), HpfMode::WithHarmonics, &HpfOptions::default()).unwrap();
    assert_eq!(a.report, b.report);
    for (n, s) in &a.node_voltages {
        assert_eq!(s, &b.node_voltages[n]);
    }
}

#[test]
fn distorted_power_flow_carries_source_harmonics() {
    let sys = test_system();
    let op = harmonic_power_flow(&sys, &limits(7), HpfMode::WithHarmonics, &HpfOptions::default()).unwrap();
    assert!(op.report.converged);
    let h5 = op.voltage_pu("N01", 0, 5).unwrap();
    assert!(h5 > 0.03 && h5 < 0.07, "{h5}");
    // The small-distortion hypothesis holds at both resources.
    for o in op.cider_ops(&sys).unwrap().values() {
        let sup = o.validate(0.5).unwrap();
        assert!(sup > 0.0 && sup < 0.2);
    }
}

#[test]
fn dc_side_resources_are_not_supported_by_the_power_flow() {
    let mut sys = test_system();
    sys.ciders[1].spec = CiderSpec::default_following_dc();
    let r = harmonic_power_flow(&sys, &limits(2), HpfMode::ZeroDistortion, &HpfOptions::default());
    assert!(matches!(r, Err(SystemError::Unsupported(_))));
}

#[test]
fn closed_loop_without_distortion_matches_the_lti_counterpart() {
    let sys = test_system();
    let lim = limits(3);
    let op = harmonic_power_flow(&sys, &lim, HpfMode::ZeroDistortion, &HpfOptions::default()).unwrap();
    let ops = op.cider_ops(&sys).unwrap();
    let cl = close_loop(&sys, &ops, &lim, 2).unwrap();
    let es = eigensolve(&cl).unwrap();
    let edge = edge_mask(&es, 3, 1e-4).unwrap();
    let (lti, variation) = lti_counterpart(&closed_loop_ltp(&sys, &fundamental_ops(&op, &sys), 2).unwrap(), 50.0).unwrap();
    assert!(variation < 1e-6);
    let le = eigenvalues(&lti).unwrap();
    assert!(le.len() < es.len());
    let mut interior = 0;
    for (l, _) in es.values.iter().zip(&edge).filter(|(_, e)| !**e) {
        interior += 1;
        let d = le.values.iter().map(|m| (m.re - l.re).abs()).fold(f64::INFINITY, f64::min);
        assert!(d <= 1e-6 * l.norm().max(1.0), "{l}: {d}");
    }
    assert!(interior >= le.len());
}

#[test]
fn closed_loop_spectrum_is_conjugate_symmetric() {
    let sys = test_system();
    let lim = limits(2);
    let op = harmonic_power_flow(&sys, &lim, HpfMode::WithHarmonics, &HpfOptions::default()).unwrap();
    let cl = close_loop(&sys, &op.cider_ops(&sys).unwrap(), &lim, 2).unwrap();
    let es = eigensolve(&cl).unwrap();
    let edge = edge_mask(&es, 2, 1e-4).unwrap();
    // Truncation-edge modes are near-defective; the interior must pair up.
    for (l, _) in es.values.iter().zip(&edge).filter(|(_, e)| !**e) {
        let d = es.values.iter().map(|m| (m - l.conj()).norm()).fold(f64::INFINITY, f64::min);
        assert!(d <= 1e-6 * l.norm().max(1.0), "{l}: {d}");
    }
}

#[test]
fn grid_modes_hardly_move_with_a_resource_gain() {
    let sys = test_system();
    let lim = limits(1);
    let solve = |s: &SystemDescription| {
        let op = harmonic_power_flow(s, &lim, HpfMode::ZeroDistortion, &HpfOptions::default()).unwrap();
        eigenvalues(&close_loop(s, &op.cider_ops(s).unwrap(), &lim, 2).unwrap()).unwrap().values
    };
    let a = solve(&sys);
    let b = solve(&sys.with_param("n05", ParamPath::parse("alpha.k_fb").unwrap(), 4.0).unwrap());
    let p = lap_match_values(&a, &b);
    for (i, l) in a.iter().enumerate() {
        if l.im.abs() > 2e5 {
            assert!((l - b[p[i]]).norm() < 1e-3 * l.norm(), "{l} -> {}", b[p[i]]);
        }
    }
}

#[test]
fn lti_counterpart_of_a_single_resource() {
    let spec = CiderSpec::default_following_ac();
    let m = hsa_cider::build_ltp_model(&spec, None).unwrap();
    let (lti, var) = lti_counterpart(&m, 50.0).unwrap();
    assert!(var < 1e-6);
    assert_eq!(lti.state_dim(), 15);
}

#[test]
fn dq_spectrum_of_a_balanced_fundamental_is_constant() {
    let idx = hsa_harmonic::HarmonicIndexSet::new(3, 50.0).unwrap();
    let src = TheveninEquivalent::system_analysis().without_harmonics();
    let abc = src.emf_spectrum(idx);
    let dq = dq_spectrum(&abc, idx.with_h_max(4)).unwrap();
    assert!((dq.get(0, 0).re - src.v_peak()).abs() < 1e-9);
    for h in 1..=4 {
        assert!(dq.get(0, h).norm() < 1e-9 && dq.get(1, h).norm() < 1e-9);
    }
    let r = reference_spectrum(&dq, 1e3, 0.0, idx).unwrap();
    assert!((r.get(0, 0).re - 1e3 / src.v_peak()).abs() < 1e-12);
    let _ = OperatingPoint::fundamental(idx, src.v_peak());
    let _ = NetworkTopology::test_system(src).unwrap();
}
