use crate::config::{Analysis, NetworkBlock, OutputBlock, ScenarioConfig, StaircaseBlock, SweepModel, SystemBlock};
use hsa_cider::CiderSpec;
use hsa_engine::{Schedule, StepKind};
use hsa_grid::TheveninEquivalent;
use hsa_system::{CiderAttachment, HpfMode, SystemDescription};
use hsa_tds::{SettleCriterion, TdsConfig};

/// Innermost feedback gain of the N05 resource at the start of the
/// gain-reduction staircase. Chosen so that the LTI counterpart crosses
/// into the right half-plane halfway through the 18-step schedule
/// (crossing gain 1.91596, so `K0 = 1.91596 / 0.99^9.5`).
pub const INSTABILITY_START_GAIN: f64 = 2.107_97;

fn system(h_abc: usize) -> SystemBlock {
    SystemBlock { f1: 50.0, h_abc, h_dqz: None, taylor_order: hsa_cider::DEFAULT_TAYLOR_ORDER }
}

fn single(id: &str, description: &str, provenance: &str, h_abc: usize, spec: CiderSpec, analysis: Analysis) -> ScenarioConfig {
    ScenarioConfig {
        id: id.into(),
        description: description.into(),
        provenance: provenance.into(),
        system: system(h_abc),
        thevenin: TheveninEquivalent::resource_analysis(),
        network: None,
        ciders: vec![CiderAttachment { name: "cider".into(), spec }],
        analysis,
        output: OutputBlock::default(),
    }
}

fn test_system(id: &str, description: &str, provenance: &str, h_abc: usize, n05_gain: Option<f64>, analysis: Analysis) -> ScenarioConfig {
    let mut sys = SystemDescription::test_system(TheveninEquivalent::system_analysis()).expect("bundled system is valid");
    if let Some(k) = n05_gain {
        sys = sys.with_param("n05", hsa_cider::ParamPath::parse("alpha.k_fb").expect("path"), k).expect("gain");
    }
    let t = sys.topology;
    ScenarioConfig {
        id: id.into(),
        description: description.into(),
        provenance: provenance.into(),
        system: system(h_abc),
        thevenin: t.source,
        network: Some(NetworkBlock { nodes: t.nodes, source_node: t.source_node, lines: t.branches, attachments: t.attachments }),
        ciders: sys.ciders,
        analysis,
        output: OutputBlock::default(),
    }
}

/// Staircase simulation settings: 0.5 µs RK4, dwell until settled.
pub fn staircase_block() -> StaircaseBlock {
    StaircaseBlock {
        harmonics: vec![true, false],
        tds: TdsConfig { record: vec!["N04".into(), "N05".into()], decimation: 100, ..Default::default() },
        settle: SettleCriterion { rms_tol: 1e-5, min_dwell: 0.1, max_dwell: 1.0, envelope_factor: 10.0 },
    }
}

/// Bundled scenarios. Every parameter value is embedded in the config.
pub fn catalogue() -> Vec<ScenarioConfig> {
    vec![
        single(
            "forming_classify_h1",
            "Grid-forming resource at h_max = 1: CDV/CDI/DI labels and set census.",
            "grid-forming resource parameter set; 1% perturbation of control and of all parameters",
            1,
            CiderSpec::default_forming(),
            Analysis::Classify { delta: 1e-2, eps_rel: 1e-9, set_tol: 1e-6, support_floor: 1e-3 },
        ),
        single(
            "flw_ac_sensitivity_K70",
            "AC-side grid-following resource: innermost feedback gain raised by 1% of its initial value for 70 steps.",
            "grid-following AC resource parameter set",
            1,
            CiderSpec::default_following_ac(),
            Analysis::Sensitivity {
                target: None,
                parameter: "alpha.k_fb".into(),
                schedule: Schedule { relative_step: 0.01, steps: 70, kind: StepKind::RelativeToInitial },
                models: vec![SweepModel::ResourceLtp],
                edge_floor: 1e-4,
                staircase: None,
            },
        ),
        single(
            "flw_dc_truncation",
            "DC-side grid-following resource: d(h_max) for h_max = 1..25 around the distorted steady state.",
            "grid-following DC resource parameter set; resource-analysis source with injected harmonics",
            1,
            CiderSpec::default_following_dc(),
            Analysis::TruncationStudy { h_values: (1..=25).collect(), harmonics: true, tds: None, settle: None },
        ),
        test_system(
            "cigre5_system_hsa",
            "Five-node feeder, closed-loop eigenvalues with and without source harmonics, and the LTI counterpart.",
            "feeder cable data and substation short-circuit data; both resources grid-following AC, N04 gain 16",
            7,
            None,
            Analysis::SystemHsa { modes: vec![HpfMode::ZeroDistortion, HpfMode::WithHarmonics], edge_floor: 1e-4 },
        ),
        test_system(
            "cigre5_instability",
            "Five-node feeder, N05 innermost gain reduced by 1% of the previous value per step: stability margins of the LTI and harmonic models, then simulated staircases with and without source harmonics.",
            "feeder data as cigre5_system_hsa; N04 gain 16; N05 start gain places the LTI crossing mid-schedule",
            7,
            Some(INSTABILITY_START_GAIN),
            Analysis::Sensitivity {
                target: Some("n05".into()),
                parameter: "alpha.k_fb".into(),
                schedule: Schedule { relative_step: -0.01, steps: 18, kind: StepKind::RelativeToPrevious },
                models: vec![SweepModel::SystemLti, SweepModel::SystemLtp, SweepModel::SystemLtpHarmonics],
                edge_floor: 1e-4,
                staircase: Some(staircase_block()),
            },
        ),
        test_system(
            "cigre5_hpf_tds",
            "Five-node feeder: harmonic power flow against a settled simulation, nodal spectra up to order 25.",
            "feeder data as cigre5_system_hsa",
            25,
            None,
            Analysis::TdsValidate {
                nodes: vec!["N04".into(), "N05".into()],
                mode: HpfMode::WithHarmonics,
                tds: TdsConfig { record: Vec::new(), ..Default::default() },
                settle: SettleCriterion::default(),
            },
        ),
    ]
}

pub fn find(id: &str) -> Option<ScenarioConfig> {
    catalogue().into_iter().find(|c| c.id == id)
}
