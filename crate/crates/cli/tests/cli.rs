use hsa_cli::*;
use serde_json::Value;
use std::path::Path;
use std::process::Command;

fn hsa() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hsa"))
}

fn tmp(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("hsa-cli-test-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn bundled_json(id: &str) -> Value {
    serde_json::from_str(&find(id).unwrap().to_json()).unwrap()
}

#[test]
fn catalogue_has_the_required_scenarios() {
    let ids: Vec<String> = catalogue().into_iter().map(|c| c.id).collect();
    for id in ["forming_classify_h1", "flw_ac_sensitivity_K70", "flw_dc_truncation", "cigre5_system_hsa", "cigre5_instability"] {
        assert!(ids.iter().any(|x| x == id), "{id}");
    }
    let c = find("cigre5_instability").unwrap();
    let n04 = c.ciders.iter().find(|c| c.name == "n04").unwrap();
    assert_eq!(n04.spec.param(hsa_cider::ParamPath::parse("alpha.k_fb").unwrap()).unwrap(), 16.0);
    assert!(matches!(c.analysis, Analysis::Sensitivity { ref staircase, .. } if staircase.as_ref().unwrap().harmonics == vec![true, false]));
    assert!(complete(&c));
}

fn complete(c: &ScenarioConfig) -> bool {
    !c.description.is_empty() && !c.provenance.is_empty() && !c.thevenin.harmonic_injection.is_empty()
}

#[test]
fn every_bundled_config_validates_and_round_trips() {
    for c in catalogue() {
        c.validate().unwrap();
        assert!(complete(&c), "{}", c.id);
        let text = c.to_json();
        let back = ScenarioConfig::parse(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json(), text);
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let mut v = bundled_json("forming_classify_h1");
    v["system"]["h_max"] = 3.into();
    assert!(matches!(ScenarioConfig::from_value(v), Err(CliError::Validation(_))));
    let mut v = bundled_json("forming_classify_h1");
    v["analysis"]["threshold"] = 1.into();
    assert!(ScenarioConfig::from_value(v).is_err());
}

#[test]
fn validation_catches_inconsistent_blocks() {
    let mut c = find("forming_classify_h1").unwrap();
    c.system.h_dqz = Some(3);
    assert!(c.validate().is_err());
    c.system.h_dqz = Some(2);
    c.validate().unwrap();
    let mut c = find("cigre5_system_hsa").unwrap();
    c.network = None;
    assert!(c.validate().is_err());
    let mut c = find("flw_dc_truncation").unwrap();
    c.analysis = Analysis::Classify { delta: 1e-2, eps_rel: 1e-9, set_tol: 1e-6, support_floor: 1e-3 };
    assert!(c.validate().is_err());
}

#[test]
fn overrides_follow_dotted_paths() {
    let mut v = bundled_json("flw_ac_sensitivity_K70");
    apply_override(&mut v, "analysis.schedule.steps=3").unwrap();
    apply_override(&mut v, "ciders.0.spec.stages.0.controller.k_fb=6.5").unwrap();
    apply_override(&mut v, "output.directory=somewhere").unwrap();
    let c = ScenarioConfig::from_value(v.clone()).unwrap();
    assert!(matches!(c.analysis, Analysis::Sensitivity { schedule, .. } if schedule.steps == 3));
    assert_eq!(c.ciders[0].spec.stages[0].controller.k_fb, 6.5);
    assert_eq!(c.output.directory.as_deref(), Some("somewhere"));
    assert!(apply_override(&mut v, "ciders.9.name=x").is_err());
    assert!(apply_override(&mut v, "no_equals_sign").is_err());
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let dir = tmp("malformed");
    let mut v = bundled_json("forming_classify_h1");
    v["ciders"][0]["spec"]["stages"][0]["filter"]["value"] = (-1e-3).into();
    let cfg = dir.join("bad.json");
    std::fs::write(&cfg, serde_json::to_string(&v).unwrap()).unwrap();
    let out = dir.join("out");
    let st = hsa().args(["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&st.stderr).is_empty());
    assert!(!out.exists());
    let st = hsa().args(["validate", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    let st = hsa().args(["run", "forming_classify_h1", "--set", "system.f1=-50", "--out", out.to_str().unwrap()]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    assert!(!out.exists());
    let st = hsa().args(["run", "no_such_scenario"]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
}

#[test]
fn scenarios_and_validate_commands() {
    let st = hsa().arg("scenarios").output().unwrap();
    assert_eq!(st.status.code(), Some(0));
    let text = String::from_utf8(st.stdout).unwrap();
    assert!(text.contains("cigre5_instability") && text.contains("provenance"));
    for c in catalogue() {
        let st = hsa().args(["validate", &c.id]).output().unwrap();
        assert_eq!(st.status.code(), Some(0), "{}", c.id);
    }
}

fn read(dir: &Path, f: &str) -> String {
    std::fs::read_to_string(dir.join(f)).unwrap()
}

#[test]
fn forming_census_and_bit_identical_reruns() {
    let dir = tmp("census");
    let (a, b) = (dir.join("a"), dir.join("b"));
    for d in [&a, &b] {
        let st = hsa().args(["run", "forming_classify_h1", "--out", d.to_str().unwrap()]).output().unwrap();
        assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    }
    let report: Value = serde_json::from_str(&read(&a, "report.json")).unwrap();
    assert_eq!(report["census"], serde_json::json!({"CDV_sets": 4, "CDI_sets": 1, "DI_pairs": 1}));
    for f in ["eigenvalues.csv", "loci.csv", "spectra.csv", "report.json", "loci.svg"] {
        assert_eq!(read(&a, f), read(&b, f), "{f}");
    }
    let csv = read(&a, "eigenvalues.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "scenario,variant,sweep_index,eigen_index,re,im,damping,label,matched_from");
    let n = lines.clone().count();
    assert_eq!(n, 38);
    // Shortest round-trip decimals parse back to the same values.
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        let re: f64 = f[4].parse().unwrap();
        assert_eq!(re.to_string(), f[4]);
    }
}

#[test]
fn sweep_outputs_loci_and_matches() {
    let dir = tmp("sweep");
    let (out, files) =
        run("flw_ac_sensitivity_K70", &["analysis.schedule.steps=4".into(), "output.formats=[\"csv\"]".into()], Some(&dir)).unwrap();
    assert_eq!(files.len(), 3);
    let steps: std::collections::BTreeSet<usize> = out.eigen.iter().map(|r| r.sweep_index).collect();
    assert_eq!(steps.len(), 5);
    assert!(out.eigen.iter().all(|r| r.matched_from.is_some()));
    assert!(out.loci.iter().all(|p| p.step <= 4));
    assert_eq!(out.report["stability_margin"]["resource_ltp"], Value::Null);
}

#[test]
fn truncation_study_on_an_ac_resource_is_flat() {
    let mut c = find("flw_ac_sensitivity_K70").unwrap();
    c.analysis = Analysis::TruncationStudy { h_values: vec![1, 3], harmonics: false, tds: None, settle: None };
    let out = execute(&c).unwrap();
    for row in out.report["d_table"].as_array().unwrap() {
        assert!(row["d"].as_f64().unwrap() < 1e-9 * row["a_norm"].as_f64().unwrap());
    }
}

#[test]
fn hpf_scenario_from_override() {
    let dir = tmp("hpf");
    let (out, _) = run(
        "cigre5_system_hsa",
        &["analysis={\"type\":\"hpf\",\"mode\":\"zero_distortion\"}".into(), "system.h_abc=3".into()],
        Some(&dir),
    )
    .unwrap();
    assert_eq!(out.report["hpf"]["converged"], Value::Bool(true));
    let n05 = out.report["fundamental_pu"]["N05"].as_f64().unwrap();
    assert!((n05 - 1.0).abs() < 0.05);
    assert!(read(&dir, "spectra.csv").lines().count() > 1);
}

mod round_trip {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn serialize_parse_is_identity(which in 0usize..6, h in 1usize..30, k in 0.1f64..50.0, steps in 0usize..100, harmonic in 0.0f64..0.2) {
            let mut c = catalogue().swap_remove(which);
            c.system.h_abc = h;
            c.ciders[0].spec.stages[0].controller.k_fb = k;
            c.thevenin.harmonic_injection[0].magnitude = harmonic;
            if let Analysis::Sensitivity { schedule, .. } = &mut c.analysis {
                schedule.steps = steps;
            }
            let back = ScenarioConfig::parse(&c.to_json()).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.to_json(), c.to_json());
        }
    }
}
