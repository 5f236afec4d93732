use hsa_cider::CiderSpec;
use hsa_grid::{AttachmentKind, NetworkTopology, TheveninEquivalent};
use hsa_harmonic::{HarmonicIndexSet, C64};
use hsa_system::{CiderAttachment, SystemDescription};
use hsa_tds::*;
use std::f64::consts::PI;

fn series_of(f: impl Fn(f64) -> f64, periods: usize, n: usize) -> TimeSeries {
    let f1 = 50.0;
    let t: Vec<f64> = (0..periods * n).map(|k| k as f64 / (n as f64 * f1)).collect();
    TimeSeries { labels: vec!["x".into()], columns: vec![t.iter().map(|&t| f(t)).collect()], t, samples_per_period: n, f1 }
}

fn cfg_with(record: &[&str]) -> TdsConfig {
    TdsConfig { record: record.iter().map(|s| s.to_string()).collect(), ..Default::default() }
}

fn test_system(with_harmonics: bool) -> SystemDescription {
    with_source_harmonics(&SystemDescription::test_system(TheveninEquivalent::system_analysis()).unwrap(), with_harmonics)
}

fn steady(sys: &SystemDescription, cfg: &TdsConfig) -> std::collections::BTreeMap<String, hsa_harmonic::HarmonicSpectrum> {
    let mut sim = Simulator::new(SystemDynamics::new(sys).unwrap(), cfg).unwrap();
    assert!(run_until_settled(&mut sim, &SettleCriterion::default()).unwrap());
    for _ in 0..cfg.fft_window {
        sim.advance_period().unwrap();
    }
    steady_state_spectrum(&sim.series, cfg, 1e-4).unwrap()
}

#[test]
fn pure_tone_spectrum() {
    let s = series_of(|t| (2.0 * PI * 50.0 * t).sin(), 5, 400);
    let cfg = TdsConfig { h_max: 25, ..Default::default() };
    let sp = steady_state_spectrum(&s, &cfg, 1e-9).unwrap();
    let x = &sp["x"];
    assert!((x.get(0, 1) - C64::new(0.0, -0.5)).norm() < 1e-12);
    assert!((x.get(0, -1) - C64::new(0.0, 0.5)).norm() < 1e-12);
    for h in -25i32..=25 {
        if h.abs() != 1 {
            assert!(x.get(0, h).norm() < 1e-12);
        }
    }
}

#[test]
fn dc_signal_spectrum() {
    let s = series_of(|_| 3.5, 5, 100);
    let x = column_spectrum(&s, 0, 5, 10).unwrap();
    assert!((x.get(0, 0).re - 3.5).abs() < 1e-12);
    assert!((1..=10).all(|h| x.get(0, h).norm() < 1e-12));
}

#[test]
fn unsettled_window_is_rejected() {
    let s = series_of(|t| t * (2.0 * PI * 50.0 * t).sin(), 6, 100);
    let cfg = TdsConfig { h_max: 5, ..Default::default() };
    assert!(matches!(steady_state_spectrum(&s, &cfg, 1e-5), Err(TdsError::Unsettled { .. })));
}

#[test]
fn config_validation() {
    assert!(TdsConfig::default().validate(50.0).is_ok());
    let c = TdsConfig { step: 5e-5, ..Default::default() };
    assert!(matches!(c.validate(50.0), Err(TdsError::StepSize { .. })));
    let c = TdsConfig { fft_window: 4, ..Default::default() };
    assert!(matches!(c.validate(50.0), Err(TdsError::InvalidConfig(_))));
    let c = TdsConfig { step: 3e-7, ..Default::default() };
    assert!(c.validate(50.0).is_err());
    let s = GainSchedule { resource: "n05".into(), parameter: "alpha.k_fb".into(), steps: vec![(0.1, 4.0), (0.1, 3.0)] };
    assert!(s.validate().is_err());
}

#[test]
fn source_emf_recovers_injected_harmonics() {
    let sys = test_system(true);
    let cfg = cfg_with(&["e"]);
    let mut sim = Simulator::new(SystemDynamics::new(&sys).unwrap(), &cfg).unwrap();
    for _ in 0..cfg.fft_window {
        sim.advance_period().unwrap();
    }
    let sp = steady_state_spectrum(&sim.series, &cfg, 1e-6).unwrap();
    let e = group_spectrum(&sp, "e").unwrap();
    let src = &sys.topology.source;
    let expected = src.emf_spectrum(HarmonicIndexSet::new(25, 50.0).unwrap());
    assert!(e.max_abs_diff(&expected).unwrap() < 1e-9 * src.v_peak());
    let h5 = &src.harmonic_injection.iter().find(|h| h.order == 5).unwrap();
    let c = e.get(0, 5) * 2.0 / src.v_peak();
    assert!((c.norm() - h5.magnitude).abs() < 1e-9);
    assert!((c.arg() - h5.phase).abs() < 1e-9);
}

#[test]
fn forming_resource_holds_its_voltage() {
    let topology = NetworkTopology::single_resource(TheveninEquivalent::resource_analysis(), AttachmentKind::Forming).unwrap();
    let sys = SystemDescription { topology, ciders: vec![CiderAttachment { name: "cider".into(), spec: CiderSpec::default_forming() }] };
    let sp = steady(&sys, &cfg_with(&["cider.v_phi"]));
    let v = group_spectrum(&sp, "cider.v_phi").unwrap();
    let rms = 2.0 * v.get(0, 1).norm() / 2f64.sqrt();
    assert!((rms - 230.0).abs() < 0.01 * 230.0, "{rms}");
}

#[test]
fn no_injection_means_no_harmonics() {
    let sys = test_system(false);
    let sp = steady(&sys, &cfg_with(&["N04", "N05"]));
    let vb = sys.topology.source.v_peak();
    for n in ["N04", "N05"] {
        let v = group_spectrum(&sp, n).unwrap();
        for h in (0..=25).filter(|&h| h != 1) {
            for x in 0..3 {
                assert!(2.0 * v.get(x, h).norm() / vb < 1e-6, "{n} h={h}");
            }
        }
    }
}

#[test]
fn halving_the_step_leaves_the_spectra_unchanged() {
    let sys = test_system(true);
    let a = steady(&sys, &cfg_with(&["N05"]));
    let b = steady(&sys, &TdsConfig { step: 2.5e-7, decimation: 40, ..cfg_with(&["N05"]) });
    let vb = sys.topology.source.v_peak();
    let (a, b) = (group_spectrum(&a, "N05").unwrap(), group_spectrum(&b, "N05").unwrap());
    assert!(2.0 * a.max_abs_diff(&b).unwrap() / vb < 1e-6);
}

#[test]
fn stable_staircase_reports_no_instability() {
    let sys = test_system(false);
    let cfg = TdsConfig { decimation: 100, ..cfg_with(&["N05", "n05.p"]) };
    let settle = SettleCriterion { min_dwell: 0.04, max_dwell: 0.1, ..Default::default() };
    let r = staircase_experiment(&sys, "n05", "alpha.k_fb", &[5.0, 5.05, 5.1], false, &cfg, &settle).unwrap();
    assert_eq!(r.instability_step, None);
    assert_eq!(r.step_times.len(), 3);
    let p = r.series.column("n05.p").unwrap();
    // Setpoint −50 kW in load convention: about 50 kW delivered (1.5× under
    // amplitude-invariant Park, see the reference law).
    assert!(p[p.len() - 1] > 0.0);
}

#[test]
fn runaway_gain_is_reported() {
    let sys = test_system(false);
    let cfg = TdsConfig { decimation: 100, ..cfg_with(&["N05"]) };
    let settle = SettleCriterion { min_dwell: 0.02, max_dwell: 0.1, ..Default::default() };
    let r = staircase_experiment(&sys, "n05", "alpha.k_fb", &[5.0, 0.5], false, &cfg, &settle).unwrap();
    assert_eq!(r.instability_step, Some(1));
    assert!(r.events.iter().any(|e| matches!(e, Event::Divergence { .. })));
}

#[test]
fn simulate_with_schedule_and_csv() {
    let sys = test_system(false);
    let cfg = TdsConfig { duration: 0.06, decimation: 200, ..cfg_with(&["N04"]) };
    let sched = GainSchedule { resource: "n05".into(), parameter: "alpha.k_fb".into(), steps: vec![(0.04, 5.5)] };
    let r = simulate(SystemDynamics::new(&sys).unwrap(), &cfg, Some(&sched), &SettleCriterion::default()).unwrap();
    assert!(r.events.iter().any(|e| matches!(e, Event::ParameterChange { value, .. } if *value == 5.5)));
    assert_eq!(r.series.len(), 3 * r.series.samples_per_period);
    assert_eq!(r.series.samples_per_period, 200);
    let mut buf = Vec::new();
    r.series.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,N04.a,N04.b,N04.c");
    let row: Vec<f64> = lines.nth(7).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[0], r.series.t[7]);
    assert_eq!(row[1], r.series.columns[0][7]);
}

mod spectrum_props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn recovers_any_integer_tone(h in 0i32..=12, amp in 0.1f64..10.0, phase in -3.0f64..3.0) {
            let s = series_of(|t| amp * (2.0 * PI * 50.0 * h as f64 * t + phase).cos(), 4, 64);
            let x = column_spectrum(&s, 0, 4, 12).unwrap();
            let want = if h == 0 { C64::new(amp * phase.cos(), 0.0) } else { C64::from_polar(amp / 2.0, phase) };
            prop_assert!((x.get(0, h) - want).norm() < 1e-10 * amp);
            for k in 0..=12 {
                if k != h {
                    prop_assert!(x.get(0, k).norm() < 1e-10 * amp);
                }
            }
        }
    }
}
