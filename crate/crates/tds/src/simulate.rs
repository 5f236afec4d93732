use crate::config::{GainSchedule, SettleCriterion, TdsConfig};
use crate::error::{Result, TdsError};
use crate::model::{Aux, SystemDynamics};
use hsa_cider::ParamPath;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Recorded samples, one column per signal.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    pub labels: Vec<String>,
    pub t: Vec<f64>,
    pub columns: Vec<Vec<f64>>,
    /// Samples per fundamental period.
    pub samples_per_period: usize,
    pub f1: f64,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn column(&self, label: &str) -> Option<&[f64]> {
        self.labels.iter().position(|l| l == label).map(|k| self.columns[k].as_slice())
    }

    /// Header `t,<labels>`, values at full precision.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "t")?;
        for l in &self.labels {
            write!(w, ",{l}")?;
        }
        writeln!(w)?;
        for (k, t) in self.t.iter().enumerate() {
            write!(w, "{t:?}")?;
            for c in &self.columns {
                write!(w, ",{:?}", c[k])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    ParameterChange { time: f64, resource: String, parameter: String, value: f64 },
    Settled { time: f64 },
    Divergence { time: f64, group: usize, ratio: f64 },
}

/// Fixed-step RK4 integrator of [`SystemDynamics`] with recording.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub model: SystemDynamics,
    cfg: TdsConfig,
    pub x: Vec<f64>,
    pub time: f64,
    step_count: u64,
    steps_per_period: usize,
    aux: Aux,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
    pub series: TimeSeries,
    record: Vec<String>,
    pub(crate) last_env: Option<Vec<f64>>,
}

impl Simulator {
    pub fn new(model: SystemDynamics, cfg: &TdsConfig) -> Result<Self> {
        let f1 = model.f1();
        cfg.validate(f1)?;
        let x = model.initial_state()?;
        let n = model.n_states();
        let aux = model.new_aux();
        let mut labels = Vec::new();
        for r in &cfg.record {
            labels.extend(model.observe_names(r, &x, &aux)?);
        }
        let columns = vec![Vec::new(); labels.len()];
        Ok(Self {
            steps_per_period: cfg.steps_per_period(f1)?,
            series: TimeSeries { labels, t: Vec::new(), columns, samples_per_period: cfg.samples_per_period(f1)?, f1 },
            record: cfg.record.clone(),
            cfg: cfg.clone(),
            model,
            x,
            time: 0.0,
            step_count: 0,
            aux,
            k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            tmp: vec![0.0; n],
            last_env: None,
        })
    }

    pub fn config(&self) -> &TdsConfig {
        &self.cfg
    }

    fn sample(&mut self) -> Result<()> {
        // Refresh the algebraic quantities at the current state.
        self.model.rhs(self.time, &self.x, &mut self.tmp, &mut self.aux);
        self.series.t.push(self.time);
        let mut c = 0;
        for r in &self.record {
            for v in self.model.observe(r, self.time, &self.x, &self.aux)? {
                self.series.columns[c].push(v);
                c += 1;
            }
        }
        Ok(())
    }

    fn rk4_step(&mut self) -> Result<()> {
        let h = self.cfg.step;
        let t = self.time;
        let n = self.x.len();
        let [k1, k2, k3, k4] = &mut self.k;
        self.model.rhs(t, &self.x, k1, &mut self.aux);
        for i in 0..n {
            self.tmp[i] = self.x[i] + 0.5 * h * k1[i];
        }
        self.model.rhs(t + 0.5 * h, &self.tmp, k2, &mut self.aux);
        for i in 0..n {
            self.tmp[i] = self.x[i] + 0.5 * h * k2[i];
        }
        self.model.rhs(t + 0.5 * h, &self.tmp, k3, &mut self.aux);
        for i in 0..n {
            self.tmp[i] = self.x[i] + h * k3[i];
        }
        self.model.rhs(t + h, &self.tmp, k4, &mut self.aux);
        for i in 0..n {
            self.x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        self.step_count += 1;
        self.time = self.step_count as f64 * h;
        if let Some(i) = self.x.iter().position(|v| !v.is_finite()) {
            return Err(TdsError::NonFinite { time: self.time, state: self.model.state_name(i).to_string() });
        }
        Ok(())
    }

    /// Integrates one fundamental period, recording every `decimation` steps
    /// (the first sample is taken at the start of the period).
    pub fn advance_period(&mut self) -> Result<()> {
        for s in 0..self.steps_per_period {
            if s % self.cfg.decimation == 0 {
                self.sample()?;
            }
            self.rk4_step()?;
        }
        Ok(())
    }

    pub fn periods_done(&self) -> usize {
        (self.step_count / self.steps_per_period as u64) as usize
    }

    /// RMS of every recorded column over the last complete period.
    pub fn last_period_rms(&self) -> Option<Vec<f64>> {
        let n = self.series.samples_per_period;
        let len = self.series.len();
        (len >= n).then(|| {
            self.series.columns.iter().map(|c| (c[len - n..].iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt()).collect()
        })
    }

    /// Largest relative change of the per-period RMS between the last two periods.
    pub fn rms_change(&self) -> Option<f64> {
        let n = self.series.samples_per_period;
        let len = self.series.len();
        if len < 2 * n {
            return None;
        }
        let rms = |c: &[f64]| (c.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        let scale = self.series.columns.iter().map(|c| rms(&c[len - n..])).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        Some(
            self.series
                .columns
                .iter()
                .map(|c| {
                    let (a, b) = (rms(&c[len - 2 * n..len - n]), rms(&c[len - n..]));
                    // Relative to the column, floored at a small fraction of the largest signal.
                    (b - a).abs() / b.max(a).max(1e-6 * scale)
                })
                .fold(0.0, f64::max),
        )
    }

    pub fn set_param(&mut self, resource: &str, parameter: &str, value: f64) -> Result<()> {
        self.model.set_param(resource, ParamPath::parse(parameter)?, value)
    }

    /// Largest magnitude of each hardware group over one period.
    pub fn period_envelope(&mut self, groups: &[Vec<usize>]) -> Result<Vec<f64>> {
        let mut env = vec![0.0f64; groups.len()];
        for s in 0..self.steps_per_period {
            if s % self.cfg.decimation == 0 {
                self.sample()?;
            }
            self.rk4_step()?;
            for (e, g) in env.iter_mut().zip(groups) {
                for &i in g {
                    *e = e.max(self.x[i].abs());
                }
            }
        }
        Ok(env)
    }
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub series: TimeSeries,
    pub events: Vec<Event>,
    pub final_state: Vec<f64>,
}

/// Runs `cfg.duration` (rounded up to whole periods) from the grid's
/// sinusoidal steady state. A schedule's values are applied at the first
/// period boundary at or after their time; once the first change is made,
/// any hardware quantity exceeding `settle.envelope_factor` times its
/// envelope over the preceding period records a divergence and stops the run.
pub fn simulate(
    model: SystemDynamics,
    cfg: &TdsConfig,
    schedule: Option<&GainSchedule>,
    settle: &SettleCriterion,
) -> Result<SimulationResult> {
    if let Some(s) = schedule {
        s.validate()?;
    }
    let mut sim = Simulator::new(model, cfg)?;
    let f1 = sim.model.f1();
    let periods = (cfg.duration * f1 - 1e-9).ceil().max(1.0) as usize;
    let groups = sim.model.hardware_groups();
    let mut events = Vec::new();
    let mut next = 0;
    let mut envelope: Option<Vec<f64>> = None;
    let mut settled_logged = false;
    for _ in 0..periods {
        if let Some(s) = schedule {
            while next < s.steps.len() && s.steps[next].0 <= sim.time + 1e-12 {
                let (_, v) = s.steps[next];
                if envelope.is_none() {
                    // Reference envelope: the period before the first change.
                    envelope = Some(last_envelope(&sim, &groups));
                }
                sim.set_param(&s.resource, &s.parameter, v)?;
                events.push(Event::ParameterChange {
                    time: sim.time,
                    resource: s.resource.clone(),
                    parameter: s.parameter.clone(),
                    value: v,
                });
                next += 1;
            }
        }
        let env = sim.period_envelope(&groups)?;
        if let Some(reference) = &envelope {
            if let Some(d) = divergence(&env, reference, settle.envelope_factor) {
                events.push(Event::Divergence { time: sim.time, group: d.0, ratio: d.1 });
                break;
            }
        }
        if !settled_logged && sim.rms_change().is_some_and(|c| c < settle.rms_tol) {
            events.push(Event::Settled { time: sim.time });
            settled_logged = true;
        }
        sim.last_env = Some(env);
    }
    Ok(SimulationResult { series: sim.series.clone(), events, final_state: sim.x.clone() })
}

fn last_envelope(sim: &Simulator, groups: &[Vec<usize>]) -> Vec<f64> {
    sim.last_env.clone().unwrap_or_else(|| groups.iter().map(|g| g.iter().map(|&i| sim.x[i].abs()).fold(0.0, f64::max)).collect())
}

/// First group whose envelope exceeds `factor` times the reference, with the
/// ratio. References are floored at 1e-6 of the largest one.
pub(crate) fn divergence(env: &[f64], reference: &[f64], factor: f64) -> Option<(usize, f64)> {
    let floor = reference.iter().fold(0.0f64, |a, &b| a.max(b)) * 1e-6;
    env.iter()
        .zip(reference)
        .enumerate()
        .map(|(k, (e, r))| (k, e / r.max(floor).max(f64::MIN_POSITIVE)))
        .find(|&(_, ratio)| ratio > factor)
}
