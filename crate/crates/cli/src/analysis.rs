use crate::config::{Analysis, ScenarioConfig, StaircaseBlock, SweepModel};
use crate::error::{num, CliError, Result};
use hsa_cider::{build_ltp_model, lift_to_hss, CiderKind, CiderSpec, OperatingPoint, ParamPath, INNERMOST_STATE};
use hsa_engine::{
    classify, edge_mask, eigensolve, eigenvalues, eigenvector_sequence_report, eigenvector_support, label_sets, set_census,
    similarity_metric, stability_margin_masked, ClassifyOptions, EigenClass, EigenLabel, EigenSet, Perturbation, Schedule,
    SensitivityTrace, SequenceLabel, SetCensus,
};
use hsa_grid::TheveninEquivalent;
use hsa_harmonic::{Domain, HarmonicLimits, HarmonicSpectrum};
use hsa_system::{
    close_loop, closed_loop_ltp, harmonic_power_flow, lti_counterpart, HpfMode, HpfOptions, OperatingPoints,
    SystemDescription, SystemOperatingPoint,
};
use hsa_tds::{
    group_spectrum, resource_operating_point, run_until_settled, staircase_experiment, steady_state_spectrum,
    with_source_harmonics, SettleCriterion, Simulator, SystemDynamics, TdsConfig,
};
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::sync::Mutex;

/// One row of `eigenvalues.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenRecord {
    pub scenario: String,
    pub variant: String,
    pub sweep_index: usize,
    pub eigen_index: usize,
    pub re: f64,
    pub im: f64,
    pub damping: f64,
    /// CDV/CDI/DI for classifications, `edge` for truncation-edge modes.
    pub label: String,
    /// Index at step 0 of the locus this eigenvalue belongs to.
    pub matched_from: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocusPoint {
    pub variant: String,
    pub locus: usize,
    pub step: usize,
    pub value: f64,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub variant: String,
    pub signal: String,
    pub channel: usize,
    pub order: i32,
    pub re: f64,
    pub im: f64,
    /// `2|X_h|/V_base` (`|X_0|/V_base` at DC).
    pub magnitude_pu: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub eigen: Vec<EigenRecord>,
    pub loci: Vec<LocusPoint>,
    pub spectra: Vec<SpectrumRow>,
    pub report: Map<String, Value>,
}

/// Worker count: `HSA_THREADS` if set, else the available parallelism.
pub fn threads() -> usize {
    std::env::var("HSA_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

// ---------------------------------------------------------------- classify

/// Perturbation-based labels of a single AC-side resource.
pub fn classify_resource(spec: &CiderSpec, limits: &HarmonicLimits, opts: ClassifyOptions) -> Result<(EigenSet, Vec<EigenClass>)> {
    let solve = |p: Perturbation| -> hsa_engine::Result<EigenSet> {
        let s = match p {
            Perturbation::Nominal => Ok(spec.clone()),
            Perturbation::Control(d) => spec.perturbed(&spec.param_paths(true), d),
            Perturbation::All(d) => spec.perturbed(&spec.param_paths(false), d),
        };
        let s = s.map_err(|e| hsa_engine::EngineError::Dimension(e.to_string()))?;
        let m = build_ltp_model(&s, None).map_err(|e| hsa_engine::EngineError::Dimension(e.to_string()))?;
        eigensolve(&lift_to_hss(&m, limits).map_err(|e| hsa_engine::EngineError::Dimension(e.to_string()))?)
    };
    classify(solve, opts).map_err(num)
}

/// A labelled set with the properties used to characterise it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetSummary {
    pub label: EigenLabel,
    pub real: f64,
    pub size: usize,
    pub members: Vec<usize>,
    /// Largest `|Re λ| / ‖Ã‖` of the members.
    pub max_rel_real: f64,
    /// Every member's eigenvector lives in hardware states only.
    pub hardware_only: bool,
    /// Every member's hardware entries are homopolar.
    pub homopolar: bool,
    /// Every member's eigenvector lives in the innermost software states only.
    pub innermost_only: bool,
}

pub fn summarise_sets(es: &EigenSet, classes: &[EigenClass], set_tol: f64, floor: f64) -> Result<Vec<SetSummary>> {
    let seq = eigenvector_sequence_report(es, floor).map_err(num)?;
    let sets = label_sets(es, classes, set_tol * es.a_norm);
    let mut out = Vec::with_capacity(sets.len());
    for s in sets {
        let mut hardware_only = true;
        let mut innermost_only = true;
        let mut homopolar = true;
        let mut max_rel_real = 0.0f64;
        for &k in &s.members {
            max_rel_real = max_rel_real.max(es.values[k].re.abs() / es.a_norm);
            for (d, g) in eigenvector_support(es, k, floor).map_err(num)? {
                hardware_only &= d == Domain::Hardware;
                innermost_only &= d == Domain::Software && g.rsplit('.').next() == Some(INNERMOST_STATE);
            }
            homopolar &= seq[k].iter().filter(|e| e.domain == Domain::Hardware).all(|e| e.label == SequenceLabel::H);
        }
        out.push(SetSummary {
            label: s.label,
            real: s.real,
            size: s.members.len(),
            members: s.members,
            max_rel_real,
            hardware_only,
            homopolar,
            innermost_only,
        });
    }
    Ok(out)
}

pub fn census_of(sets: &[SetSummary]) -> SetCensus {
    let ls: Vec<hsa_engine::LabelSet> =
        sets.iter().map(|s| hsa_engine::LabelSet { label: s.label, real: s.real, members: s.members.clone() }).collect();
    set_census(&ls)
}

// ------------------------------------------------------- truncation study

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationRow {
    pub h_max: usize,
    pub d: f64,
    pub a_norm: f64,
    pub ltp_dimension: usize,
}

/// Internal steady state of a single resource behind `source`, needed for
/// DC-side resources. `None` for AC-side kinds.
pub fn resource_op(
    spec: &CiderSpec,
    source: &TheveninEquivalent,
    harmonics: bool,
    tds: &TdsConfig,
    settle: &SettleCriterion,
) -> Result<Option<OperatingPoint>> {
    if spec.kind != CiderKind::GridFollowingDc {
        return Ok(None);
    }
    let src = if harmonics { source.clone() } else { source.without_harmonics() };
    let (op, _) = resource_operating_point(spec, &src, tds, settle).map_err(num)?;
    Ok(Some(op))
}

/// Settling window long enough for the DC link.
pub fn dc_settle() -> SettleCriterion {
    SettleCriterion { max_dwell: 2.0, ..Default::default() }
}

/// `d(h)` between the LTI counterpart (around the fundamental-only
/// operating point) and the harmonic model (around the full one), with the
/// LTI eigenvalues and the rows.
pub fn truncation_study(spec: &CiderSpec, op: Option<&OperatingPoint>, f1: f64, h_values: &[usize]) -> Result<(EigenSet, Vec<(TruncationRow, EigenSet)>)> {
    let fop = op.map(|o| o.fundamental_only());
    let (lti, _) = lti_counterpart(&build_ltp_model(spec, fop.as_ref()).map_err(num)?, f1).map_err(num)?;
    let le = eigenvalues(&lti).map_err(num)?;
    let model = build_ltp_model(spec, op).map_err(num)?;
    let mut rows = Vec::new();
    for &h in h_values {
        let limits = HarmonicLimits::new(f1, h).map_err(num)?;
        let hss = lift_to_hss(&model, &limits).map_err(num)?;
        let e = eigenvalues(&hss).map_err(num)?;
        let (d, _) = similarity_metric(&le.values, &e.values);
        rows.push((TruncationRow { h_max: h, d, a_norm: hss.a_norm(), ltp_dimension: e.len() }, e));
    }
    Ok((le, rows))
}

// ------------------------------------------------------------ sensitivity

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub model: SweepModel,
    pub trace: SensitivityTrace,
    /// Per-step truncation-edge masks, indexed like `trace.steps[k]`.
    pub masks: Vec<Vec<bool>>,
    /// First step with a non-edge eigenvalue in the right half-plane.
    pub margin: Option<usize>,
}

/// Closed-loop system eigenvalues with the truncation-edge mask. LTI models
/// use the fundamental power flow and mask nothing.
pub fn system_eigen(
    sys: &SystemDescription,
    model: SweepModel,
    limits: &HarmonicLimits,
    taylor_order: usize,
    edge_floor: f64,
) -> Result<(EigenSet, Vec<bool>, SystemOperatingPoint)> {
    let opts = HpfOptions::default();
    match model {
        SweepModel::SystemLti => {
            let l1 = HarmonicLimits::new(limits.f1, 1).map_err(num)?;
            let op = harmonic_power_flow(sys, &l1, HpfMode::ZeroDistortion, &opts).map_err(num)?;
            let ops = op.cider_ops(sys).map_err(num)?;
            let fops: OperatingPoints = ops.iter().map(|(k, o)| (k.clone(), o.fundamental_only())).collect();
            let (lti, _) = lti_counterpart(&closed_loop_ltp(sys, &fops, taylor_order).map_err(num)?, limits.f1).map_err(num)?;
            let es = eigenvalues(&lti).map_err(num)?;
            let mask = vec![false; es.len()];
            Ok((es, mask, op))
        }
        SweepModel::SystemLtp | SweepModel::SystemLtpHarmonics => {
            let mode = if model == SweepModel::SystemLtp { HpfMode::ZeroDistortion } else { HpfMode::WithHarmonics };
            let op = harmonic_power_flow(sys, limits, mode, &opts).map_err(num)?;
            let ops = op.cider_ops(sys).map_err(num)?;
            let mut es = eigensolve(&close_loop(sys, &ops, limits, taylor_order).map_err(num)?).map_err(num)?;
            let mask = edge_mask(&es, limits.h_abc, edge_floor).map_err(num)?;
            es.vectors = None;
            Ok((es, mask, op))
        }
        _ => Err(CliError::Validation(format!("{} is not a system model", model.name()))),
    }
}

/// Single-resource eigenvalues with the truncation-edge mask.
pub fn resource_eigen(spec: &CiderSpec, model: SweepModel, limits: &HarmonicLimits, edge_floor: f64) -> Result<(EigenSet, Vec<bool>)> {
    let m = build_ltp_model(spec, None).map_err(num)?;
    match model {
        SweepModel::ResourceLti => {
            let (lti, _) = lti_counterpart(&m, limits.f1).map_err(num)?;
            let es = eigenvalues(&lti).map_err(num)?;
            let mask = vec![false; es.len()];
            Ok((es, mask))
        }
        SweepModel::ResourceLtp => {
            let mut es = eigensolve(&lift_to_hss(&m, limits).map_err(num)?).map_err(num)?;
            let mask = edge_mask(&es, limits.h_abc, edge_floor).map_err(num)?;
            es.vectors = None;
            Ok((es, mask))
        }
        _ => Err(CliError::Validation(format!("{} is not a resource model", model.name()))),
    }
}

/// Follows the eigenvalues of `model` while `parameter` of resource
/// `target` steps through `schedule`. `sys` is `None` for resource models.
#[allow(clippy::too_many_arguments)]
pub fn run_sweep(
    sys: Option<&SystemDescription>,
    spec: &CiderSpec,
    target: &str,
    parameter: &str,
    schedule: &Schedule,
    model: SweepModel,
    limits: &HarmonicLimits,
    taylor_order: usize,
    edge_floor: f64,
    threads: usize,
) -> Result<SweepResult> {
    let path = ParamPath::parse(parameter).map_err(|e| CliError::Validation(e.to_string()))?;
    let initial = spec.param(path).map_err(|e| CliError::Validation(e.to_string()))?;
    let masks: Mutex<BTreeMap<u64, Vec<bool>>> = Mutex::new(BTreeMap::new());
    let solve = |v: f64| -> hsa_engine::Result<EigenSet> {
        let wrap = |e: CliError| hsa_engine::EngineError::Dimension(e.to_string());
        let (es, mask) = match sys {
            Some(sys) => {
                let s = sys.with_param(target, path, v).map_err(|e| wrap(num(e)))?;
                let (es, mask, _) = system_eigen(&s, model, limits, taylor_order, edge_floor).map_err(wrap)?;
                (es, mask)
            }
            None => {
                let s = spec.with_param(path, v).map_err(|e| wrap(num(e)))?;
                resource_eigen(&s, model, limits, edge_floor).map_err(wrap)?
            }
        };
        masks.lock().expect("mask store").insert(v.to_bits(), mask);
        Ok(es)
    };
    let trace = hsa_engine::sensitivity_sweep(parameter, initial, schedule, threads, solve);
    if let Some((k, msg)) = &trace.aborted {
        if trace.steps.is_empty() {
            return Err(CliError::Numerical(format!("sweep step {k}: {msg}")));
        }
    }
    let store = masks.into_inner().expect("mask store");
    let masks: Vec<Vec<bool>> = trace.values.iter().take(trace.steps.len()).map(|v| store[&v.to_bits()].clone()).collect();
    let margin = stability_margin_masked(&trace, &masks);
    Ok(SweepResult { model, trace, masks, margin })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaircaseOutcome {
    pub harmonics: bool,
    pub instability_step: Option<usize>,
    pub step_times: Vec<f64>,
}

pub fn run_staircases(sys: &SystemDescription, target: &str, parameter: &str, values: &[f64], block: &StaircaseBlock) -> Result<Vec<StaircaseOutcome>> {
    let mut out = Vec::new();
    for &h in &block.harmonics {
        let r = staircase_experiment(sys, target, parameter, values, h, &block.tds, &block.settle).map_err(num)?;
        out.push(StaircaseOutcome { harmonics: h, instability_step: r.instability_step, step_times: r.step_times });
    }
    Ok(out)
}

// --------------------------------------------------------- TDS validation

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumComparison {
    pub node: String,
    /// Largest per-order deviation over phases, p.u.
    pub max_diff_pu: f64,
    pub worst_order: i32,
}

/// Settled simulation spectra of `nodes`.
pub fn tds_node_spectra(sys: &SystemDescription, nodes: &[String], tds: &TdsConfig, settle: &SettleCriterion) -> Result<BTreeMap<String, HarmonicSpectrum>> {
    let mut cfg = tds.clone();
    cfg.record = nodes.to_vec();
    let mut sim = Simulator::new(SystemDynamics::new(sys).map_err(num)?, &cfg).map_err(num)?;
    if !run_until_settled(&mut sim, settle).map_err(num)? {
        return Err(CliError::Numerical("simulation did not settle".into()));
    }
    for _ in 0..cfg.fft_window {
        sim.advance_period().map_err(num)?;
    }
    let spectra = steady_state_spectrum(&sim.series, &cfg, settle.rms_tol.max(1e-4)).map_err(num)?;
    nodes.iter().map(|n| Ok((n.clone(), group_spectrum(&spectra, n).map_err(num)?))).collect()
}

pub fn compare_spectra(hpf: &SystemOperatingPoint, tds: &BTreeMap<String, HarmonicSpectrum>, h_max: usize) -> Vec<SpectrumComparison> {
    let mut out = Vec::new();
    for (node, s) in tds {
        let v = &hpf.node_voltages[node];
        let mut worst = (0.0f64, 0i32);
        for h in 0..=h_max as i32 {
            for x in 0..3 {
                let scale = if h == 0 { 1.0 } else { 2.0 };
                let d = scale * (v.get(x, h) - s.get(x, h)).norm() / hpf.v_base;
                if d > worst.0 {
                    worst = (d, h);
                }
            }
        }
        out.push(SpectrumComparison { node: node.clone(), max_diff_pu: worst.0, worst_order: worst.1 });
    }
    out
}

// ------------------------------------------------------------------ runner

fn spectrum_rows(variant: &str, signal: &str, s: &HarmonicSpectrum, v_base: f64, out: &mut Vec<SpectrumRow>) {
    for ch in 0..s.channel_count() {
        for h in 0..=s.index_set().h_max as i32 {
            let c = s.get(ch, h);
            let scale = if h == 0 { 1.0 } else { 2.0 };
            out.push(SpectrumRow {
                variant: variant.into(),
                signal: signal.into(),
                channel: ch,
                order: h,
                re: c.re,
                im: c.im,
                magnitude_pu: scale * c.norm() / v_base,
            });
        }
    }
}

fn eigen_rows(scenario: &str, variant: &str, sweep_index: usize, es: &EigenSet, label: impl Fn(usize) -> String, from: impl Fn(usize) -> Option<usize>, out: &mut Vec<EigenRecord>) {
    for (k, l) in es.values.iter().enumerate() {
        out.push(EigenRecord {
            scenario: scenario.into(),
            variant: variant.into(),
            sweep_index,
            eigen_index: k,
            re: l.re,
            im: l.im,
            damping: hsa_engine::damping(*l),
            label: label(k),
            matched_from: from(k),
        });
    }
}

fn hpf_json(op: &SystemOperatingPoint) -> Value {
    json!({
        "iterations": op.report.iterations,
        "converged": op.report.converged,
        "relaxation": op.report.relaxation,
        "flags": op.flags,
    })
}

fn interior_max_real(es: &EigenSet, mask: &[bool]) -> f64 {
    es.values.iter().zip(mask).filter(|(_, m)| !**m).map(|(l, _)| l.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Executes the analysis block of a validated scenario.
pub fn execute(cfg: &ScenarioConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let id = cfg.id.as_str();
    let limits = cfg.limits()?;
    let taylor = cfg.system.taylor_order;
    let mut out = RunOutput::default();
    let mut r = Map::new();
    r.insert("scenario".into(), json!(id));
    r.insert("analysis".into(), json!(cfg.analysis.name()));
    r.insert("h_abc".into(), json!(limits.h_abc));
    r.insert("h_dqz".into(), json!(limits.h_dqz));
    let sys = cfg.system_description()?;
    match &cfg.analysis {
        Analysis::Classify { delta, eps_rel, set_tol, support_floor } => {
            let spec = &cfg.resource()?.spec;
            let (es, classes) = classify_resource(spec, &limits, ClassifyOptions { delta: *delta, eps_rel: *eps_rel })?;
            let sets = summarise_sets(&es, &classes, *set_tol, *support_floor)?;
            eigen_rows(id, "nominal", 0, &es, |k| classes[k].label.to_string(), |_| None, &mut out.eigen);
            r.insert("a_norm".into(), json!(es.a_norm));
            r.insert("eps".into(), json!(eps_rel * es.a_norm));
            r.insert("census".into(), serde_json::to_value(census_of(&sets)).expect("census"));
            let counts: Map<String, Value> =
                hsa_engine::census(&classes).iter().map(|(l, n)| (l.to_string(), json!(n))).collect();
            r.insert("eigenvalue_counts".into(), Value::Object(counts));
            r.insert("ambiguous".into(), json!(classes.iter().filter(|c| c.ambiguous).count()));
            r.insert("sets".into(), serde_json::to_value(&sets).expect("sets"));
        }
        Analysis::TruncationStudy { h_values, harmonics, tds, settle } => {
            let spec = &cfg.resource()?.spec;
            let op = resource_op(spec, &cfg.thevenin, *harmonics, &tds.clone().unwrap_or_default(), &settle.unwrap_or_else(dc_settle))?;
            let (le, rows) = truncation_study(spec, op.as_ref(), cfg.system.f1, h_values)?;
            eigen_rows(id, "lti", 0, &le, |_| String::new(), |_| None, &mut out.eigen);
            for (k, (_, e)) in rows.iter().enumerate() {
                eigen_rows(id, "ltp", k + 1, e, |_| String::new(), |_| None, &mut out.eigen);
            }
            let table: Vec<&TruncationRow> = rows.iter().map(|(t, _)| t).collect();
            r.insert("lti_dimension".into(), json!(le.len()));
            r.insert("d_table".into(), serde_json::to_value(&table).expect("table"));
            if let Some(op) = &op {
                let sup = op.validate(f64::INFINITY).map_err(num)?;
                r.insert("xi_sup".into(), json!(sup));
            }
        }
        Analysis::Sensitivity { target, parameter, schedule, models, edge_floor, staircase } => {
            let c = cfg.target(target.as_deref())?;
            let mut margins = Map::new();
            let mut max_re = Map::new();
            for (vi, &m) in models.iter().enumerate() {
                let res = run_sweep(sys.as_ref(), &c.spec, &c.name, parameter, schedule, m, &limits, taylor, *edge_floor, threads())?;
                let t = &res.trace;
                let variant = m.name();
                for (k, es) in t.steps.iter().enumerate() {
                    let mut from = vec![None; es.len()];
                    for (i, &j) in t.to_initial[k].iter().enumerate() {
                        from[j] = Some(i);
                    }
                    let mask = &res.masks[k];
                    eigen_rows(id, variant, k, es, |j| if mask[j] { "edge".into() } else { String::new() }, |j| from[j], &mut out.eigen);
                }
                for i in 0..t.steps[0].len() {
                    if res.masks[0][i] {
                        continue;
                    }
                    for (k, l) in t.locus(i).into_iter().enumerate() {
                        out.loci.push(LocusPoint { variant: variant.into(), locus: i, step: k, value: t.values[k], re: l.re, im: l.im });
                    }
                }
                margins.insert(variant.into(), json!(res.margin));
                let per_step: Vec<f64> = t.steps.iter().zip(&res.masks).map(|(e, m)| interior_max_real(e, m)).collect();
                max_re.insert(variant.into(), json!(per_step));
                if let Some((k, msg)) = &t.aborted {
                    r.insert(format!("aborted_{vi}"), json!({ "step": k, "message": msg }));
                }
            }
            r.insert("parameter".into(), json!(parameter));
            r.insert("target".into(), json!(c.name));
            r.insert("values".into(), json!(schedule.values(c.spec.param(ParamPath::parse(parameter).map_err(num)?).map_err(num)?)));
            r.insert("stability_margin".into(), Value::Object(margins));
            r.insert("max_interior_real".into(), Value::Object(max_re));
            if let (Some(block), Some(sys)) = (staircase, sys.as_ref()) {
                let initial = c.spec.param(ParamPath::parse(parameter).map_err(num)?).map_err(num)?;
                let outcomes = run_staircases(sys, &c.name, parameter, &schedule.values(initial), block)?;
                r.insert("staircase".into(), serde_json::to_value(&outcomes).expect("staircase"));
            }
        }
        Analysis::SystemHsa { modes, edge_floor } => {
            let sys = sys.as_ref().expect("validated");
            let (lti, _, _) = system_eigen(sys, SweepModel::SystemLti, &limits, taylor, *edge_floor)?;
            eigen_rows(id, "lti", 0, &lti, |_| String::new(), |_| None, &mut out.eigen);
            let mut variants = Map::new();
            variants.insert("lti".into(), json!({ "dimension": lti.len(), "max_real": lti.max_real() }));
            for (k, &mode) in modes.iter().enumerate() {
                let model = if mode == HpfMode::ZeroDistortion { SweepModel::SystemLtp } else { SweepModel::SystemLtpHarmonics };
                let (es, mask, op) = system_eigen(sys, model, &limits, taylor, *edge_floor)?;
                let name = model.name();
                eigen_rows(id, name, k + 1, &es, |j| if mask[j] { "edge".into() } else { String::new() }, |_| None, &mut out.eigen);
                for (n, v) in &op.node_voltages {
                    spectrum_rows(name, n, v, op.v_base, &mut out.spectra);
                }
                let ops = op.cider_ops(sys).map_err(num)?;
                let xi: Map<String, Value> =
                    ops.iter().map(|(n, o)| (n.clone(), json!(o.validate(f64::INFINITY).unwrap_or(f64::NAN)))).collect();
                variants.insert(
                    name.into(),
                    json!({
                        "dimension": es.len(),
                        "edge_modes": mask.iter().filter(|m| **m).count(),
                        "max_interior_real": interior_max_real(&es, &mask),
                        "stable": interior_max_real(&es, &mask) < 0.0,
                        "hpf": hpf_json(&op),
                        "xi_sup": xi,
                    }),
                );
            }
            r.insert("variants".into(), Value::Object(variants));
        }
        Analysis::TdsValidate { nodes, mode, tds, settle } => {
            let sys = sys.as_ref().expect("validated");
            let op = harmonic_power_flow(sys, &limits, *mode, &HpfOptions::default()).map_err(num)?;
            let tsys = with_source_harmonics(sys, *mode == HpfMode::WithHarmonics);
            let spectra = tds_node_spectra(&tsys, nodes, tds, settle)?;
            let h = limits.h_abc.min(tds.h_max);
            for n in nodes {
                spectrum_rows("hpf", n, &op.node_voltages[n], op.v_base, &mut out.spectra);
                spectrum_rows("tds", n, &spectra[n], op.v_base, &mut out.spectra);
            }
            let cmp = compare_spectra(&op, &spectra, h);
            r.insert("h_compared".into(), json!(h));
            r.insert("hpf".into(), hpf_json(&op));
            r.insert("max_diff_pu".into(), json!(cmp.iter().map(|c| c.max_diff_pu).fold(0.0, f64::max)));
            r.insert("nodes".into(), serde_json::to_value(&cmp).expect("cmp"));
        }
        Analysis::Hpf { mode, options } => {
            let sys = sys.as_ref().expect("validated");
            let op = harmonic_power_flow(sys, &limits, *mode, &options.unwrap_or_default()).map_err(num)?;
            for (n, v) in &op.node_voltages {
                spectrum_rows("hpf", n, v, op.v_base, &mut out.spectra);
            }
            let fund: Map<String, Value> =
                op.node_voltages.keys().map(|n| (n.clone(), json!(op.voltage_pu(n, 0, 1)))).collect();
            r.insert("hpf".into(), hpf_json(&op));
            r.insert("residuals".into(), json!(op.report.residuals));
            r.insert("fundamental_pu".into(), Value::Object(fund));
        }
    }
    out.report = r;
    Ok(out)
}
