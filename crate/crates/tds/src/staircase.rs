use crate::config::{SettleCriterion, TdsConfig};
use crate::error::{Result, TdsError};
use crate::model::SystemDynamics;
use crate::simulate::{divergence, Event, Simulator, TimeSeries};
use crate::spectrum::{group_spectrum, steady_state_spectrum};
use hsa_cider::{CiderSpec, DcOperatingPoint, OpSource, OperatingPoint};
use hsa_grid::{AttachmentKind, NetworkTopology, TheveninEquivalent};
use hsa_harmonic::{HarmonicIndexSet, HarmonicSpectrum};
use hsa_system::{dq_spectrum, CiderAttachment, SystemDescription};
use std::collections::BTreeMap;

/// Integrates until the recorded signals settle (after at least
/// `min_dwell`), or `max_dwell` elapses. Returns whether it settled.
pub fn run_until_settled(sim: &mut Simulator, settle: &SettleCriterion) -> Result<bool> {
    let f1 = sim.model.f1();
    let start = sim.periods_done();
    let min = (settle.min_dwell * f1).ceil() as usize;
    let max = (settle.max_dwell * f1).ceil().max(min as f64) as usize;
    while sim.periods_done() - start < max {
        sim.advance_period()?;
        if sim.periods_done() - start >= min.max(2) && sim.rms_change().is_some_and(|c| c < settle.rms_tol) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Copy of the system with the source harmonics removed when `with_harmonics` is false.
pub fn with_source_harmonics(sys: &SystemDescription, with_harmonics: bool) -> SystemDescription {
    let mut s = sys.clone();
    if !with_harmonics {
        s.topology.source = s.topology.source.without_harmonics();
    }
    s
}

#[derive(Debug, Clone)]
pub struct StaircaseResult {
    /// Step index (into the value list) during which divergence triggered.
    pub instability_step: Option<usize>,
    /// Start time of each applied step.
    pub step_times: Vec<f64>,
    pub events: Vec<Event>,
    pub series: TimeSeries,
}

/// Applies `values[0]`, lets the system settle, then steps through the
/// remaining values, holding each until the recorded signals settle. The
/// nominal envelope is the one of the settled initial condition.
pub fn staircase_experiment(
    sys: &SystemDescription,
    resource: &str,
    parameter: &str,
    values: &[f64],
    with_harmonics: bool,
    cfg: &TdsConfig,
    settle: &SettleCriterion,
) -> Result<StaircaseResult> {
    if values.is_empty() {
        return Err(TdsError::InvalidConfig("empty staircase".into()));
    }
    let sys = with_source_harmonics(sys, with_harmonics);
    let mut model = SystemDynamics::new(&sys)?;
    model.set_param(resource, hsa_cider::ParamPath::parse(parameter)?, values[0])?;
    let mut sim = Simulator::new(model, cfg)?;
    let groups = sim.model.hardware_groups();
    let mut events = Vec::new();
    let mut step_times = vec![0.0];
    if run_until_settled(&mut sim, settle)? {
        events.push(Event::Settled { time: sim.time });
    }
    let reference = sim.period_envelope(&groups)?;
    let f1 = sim.model.f1();
    let min = (settle.min_dwell * f1).ceil() as usize;
    let max = (settle.max_dwell * f1).ceil().max(min as f64) as usize;
    for (s, &v) in values.iter().enumerate().skip(1) {
        sim.set_param(resource, parameter, v)?;
        step_times.push(sim.time);
        events.push(Event::ParameterChange { time: sim.time, resource: resource.into(), parameter: parameter.into(), value: v });
        for p in 0..max {
            let env = match sim.period_envelope(&groups) {
                Ok(e) => e,
                Err(TdsError::NonFinite { time, .. }) => {
                    events.push(Event::Divergence { time, group: usize::MAX, ratio: f64::INFINITY });
                    return Ok(StaircaseResult { instability_step: Some(s), step_times, events, series: sim.series });
                }
                Err(e) => return Err(e),
            };
            if let Some((g, ratio)) = divergence(&env, &reference, settle.envelope_factor) {
                events.push(Event::Divergence { time: sim.time, group: g, ratio });
                return Ok(StaircaseResult { instability_step: Some(s), step_times, events, series: sim.series });
            }
            if p + 1 >= min.max(2) && sim.rms_change().is_some_and(|c| c < settle.rms_tol) {
                events.push(Event::Settled { time: sim.time });
                break;
            }
        }
    }
    Ok(StaircaseResult { instability_step: None, step_times, events, series: sim.series })
}

/// Periodic steady state of a single following resource behind the source
/// impedance, for linearising its DC link. Spectra are truncated to `h_max`
/// (ABC) and `h_max + 1` (DQ).
pub fn resource_operating_point(
    spec: &CiderSpec,
    source: &TheveninEquivalent,
    cfg: &TdsConfig,
    settle: &SettleCriterion,
) -> Result<(OperatingPoint, BTreeMap<String, HarmonicSpectrum>)> {
    let topology = NetworkTopology::single_resource(source.clone(), AttachmentKind::Following)?;
    let name = topology.attachments[0].name.clone();
    let sys = SystemDescription { topology, ciders: vec![CiderAttachment { name: name.clone(), spec: spec.clone() }] };
    let mut cfg = cfg.clone();
    cfg.record = ["v_port", "u", "i_alpha", "v_delta"].iter().map(|q| format!("{name}.{q}")).collect();
    let mut sim = Simulator::new(SystemDynamics::new(&sys)?, &cfg)?;
    if !run_until_settled(&mut sim, settle)? {
        return Err(TdsError::Unsettled { residual: sim.rms_change().unwrap_or(f64::INFINITY) });
    }
    for _ in 0..cfg.fft_window {
        sim.advance_period()?;
    }
    let spectra = steady_state_spectrum(&sim.series, &cfg, settle.rms_tol.max(1e-4))?;
    let v_abc = group_spectrum(&spectra, &format!("{name}.v_port"))?;
    let dqz = HarmonicIndexSet::new(cfg.h_max + 1, source.f1)?;
    let v_gamma_dq = dq_spectrum(&v_abc, dqz)?;
    let dc = spec.kind == hsa_cider::CiderKind::GridFollowingDc;
    let op = OperatingPoint {
        v_gamma_dq,
        source: OpSource::Tds,
        dc: if dc {
            Some(DcOperatingPoint {
                u_abc: group_spectrum(&spectra, &format!("{name}.u"))?,
                i_alpha_abc: group_spectrum(&spectra, &format!("{name}.i_alpha"))?,
                v_delta: spectra[&format!("{name}.v_delta")].clone(),
            })
        } else {
            None
        },
    };
    Ok((op, spectra))
}
