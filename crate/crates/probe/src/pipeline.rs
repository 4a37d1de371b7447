//! End-to-end probing runs over scenarios.

use std::fmt;
use std::time::Instant;

use pcp_core::circuit::{detect_change, tf_to_circuit, ChangeThresholds, CircuitParams, ModelDelta, PARAM_NAMES};
use pcp_core::ident::{
    balanced_realization, build_hankel, default_window, select_order, to_continuous, to_second_order_tf, RealizedModel,
    SecondOrderFit,
};
use pcp_core::plant::{direct_impulse_response, simulate, NoiseConfig, PlantModel, ScenarioConfig};
use pcp_core::qsss::{track_qsss, QsssTrack};
use pcp_core::signals::{
    circular_xcorr, deembed_filter, generate_mls, mls_unbias, reference_signal, snr_db, synthesize_prbpt,
    validate_config, ChipSequence, Notch, ProbeConfig, ValidationReport,
};
use pcp_core::{nrmse, Unit, Waveform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ProbeError, Result};
use crate::io::{scenario_hash, ModelRecord};

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Validate,
    Synthesize,
    Simulate,
    Notch,
    Correlate,
    Hankel,
    Order,
    Realize,
    Continuous,
    SecondOrder,
    Circuit,
    Qsss,
}

impl Stage {
    pub const ALL: [Stage; 12] = [
        Stage::Validate,
        Stage::Synthesize,
        Stage::Simulate,
        Stage::Notch,
        Stage::Correlate,
        Stage::Hankel,
        Stage::Order,
        Stage::Realize,
        Stage::Continuous,
        Stage::SecondOrder,
        Stage::Circuit,
        Stage::Qsss,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Validate => "validate",
            Stage::Synthesize => "synthesize",
            Stage::Simulate => "simulate",
            Stage::Notch => "notch",
            Stage::Correlate => "correlate",
            Stage::Hankel => "hankel",
            Stage::Order => "order",
            Stage::Realize => "realize",
            Stage::Continuous => "continuous",
            Stage::SecondOrder => "second_order",
            Stage::Circuit => "circuit",
            Stage::Qsss => "qsss",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: Stage,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: Stage,
    pub seconds: f64,
}

/// Probe data needed before a model exists, in seconds and nominal cycles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Latency {
    /// One probe period, the window the correlation reads.
    pub data_window_s: f64,
    pub data_window_cycles: f64,
    /// Every injected period.
    pub total_s: f64,
    pub total_cycles: f64,
}

impl Latency {
    pub fn of(probe: &ProbeConfig) -> Self {
        let f = probe.nominal_frequency;
        Latency {
            data_window_s: probe.period(),
            data_window_cycles: probe.period() * f,
            total_s: probe.injected_duration(),
            total_cycles: probe.injected_duration() * f,
        }
    }
}

/// Relative error of each recovered parameter against the simulated circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterErrors {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "R2")]
    pub r2: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl ParameterErrors {
    pub fn between(truth: &CircuitParams, recovered: &CircuitParams) -> Self {
        let rel = |t: f64, r: f64| (r - t).abs() / t.abs();
        ParameterErrors {
            l: rel(truth.l, recovered.l),
            r1: rel(truth.r1, recovered.r1),
            r2: rel(truth.r2, recovered.r2),
            c: rel(truth.c, recovered.c),
        }
    }

    pub fn max(&self) -> f64 {
        self.l.max(self.r1).max(self.r2).max(self.c)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMetrics {
    /// `20 log10(rms(y_s) / rms(y_p))` over the injected window; absent
    /// without a steady-state current.
    pub snr_db: Option<f64>,
    pub markov_error: Option<f64>,
    /// NRMSE of the correlation output against the direct impulse response
    /// over the memory length.
    pub impulse_nrmse: Option<f64>,
    pub hankel_window: Option<usize>,
    pub hankel_settled: Option<bool>,
    pub order: Option<usize>,
    pub energy_captured: Option<f64>,
    pub truncation_bound: Option<f64>,
    pub parameter_errors: Option<ParameterErrors>,
    /// Median of `|I_s| / |I|` over the phasor windows.
    pub source_ratio: Option<f64>,
    pub latency: Option<Latency>,
}

/// The simulated terminal measurements of one scenario, on the chip grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurements {
    /// Injected probe voltage.
    pub probe: Waveform,
    /// Terminal voltage: operating voltage plus probe.
    pub voltage: Waveform,
    /// Terminal current including measurement noise.
    pub current: Waveform,
    /// Index of the first injected chip.
    pub injection_start: usize,
}

/// Everything one probing run produced. Stages that did not run leave their
/// fields empty and `failure` names the stage that stopped the run.
#[derive(Debug, Clone)]
pub struct ProbeRun {
    pub id: String,
    pub scenario: ScenarioConfig,
    pub scenario_sha256: String,
    pub validation: Option<ValidationReport>,
    pub chips: Option<ChipSequence>,
    pub measurements: Option<Measurements>,
    /// Current after the notch, or the raw current when notching is off.
    pub filtered_current: Option<Waveform>,
    /// Impulse-response estimate indexed by lag, lag 0 first.
    pub z_p: Option<Waveform>,
    pub oracle: Option<Waveform>,
    pub model: Option<RealizedModel>,
    pub continuous: Option<RealizedModel>,
    pub fit: Option<SecondOrderFit>,
    pub circuit: Option<CircuitParams>,
    pub qsss: Option<QsssTrack>,
    pub metrics: RunMetrics,
    pub timings: Vec<StageTiming>,
    pub failure: Option<StageFailure>,
}

impl ProbeRun {
    fn new(scenario: &ScenarioConfig) -> Self {
        ProbeRun {
            id: scenario.id.clone(),
            scenario: scenario.clone(),
            scenario_sha256: scenario_hash(scenario),
            validation: None,
            chips: None,
            measurements: None,
            filtered_current: None,
            z_p: None,
            oracle: None,
            model: None,
            continuous: None,
            fit: None,
            circuit: None,
            qsss: None,
            metrics: RunMetrics::default(),
            timings: Vec::new(),
            failure: None,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }

    /// The serializable part of the run, as stored in `<id>_run.json`.
    pub fn record(&self) -> RunRecord {
        RunRecord {
            id: self.id.clone(),
            scenario_sha256: self.scenario_sha256.clone(),
            probe: self.scenario.probe.clone(),
            circuit: self.circuit,
            fit: self.fit.clone(),
            model: self.model.as_ref().map(ModelRecord::from),
            z_p: self.z_p.clone(),
            metrics: self.metrics.clone(),
            failure: self.failure.clone(),
        }
    }
}

/// A run reduced to what comparisons and reports need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: String,
    pub scenario_sha256: String,
    pub probe: ProbeConfig,
    pub circuit: Option<CircuitParams>,
    pub fit: Option<SecondOrderFit>,
    pub model: Option<ModelRecord>,
    pub z_p: Option<Waveform>,
    pub metrics: RunMetrics,
    pub failure: Option<StageFailure>,
}

/// Samples covering the memory length at the chip rate.
pub fn memory_samples(scenario: &ScenarioConfig) -> usize {
    ((scenario.analysis.memory_length / scenario.probe.bit_duration) - 1e-9)
        .ceil()
        .max(1.0) as usize
}

/// Whole chips of warmup before the probe starts.
pub fn warmup_chips(scenario: &ScenarioConfig) -> usize {
    (scenario.analysis.warmup / scenario.probe.bit_duration - 1e-9)
        .ceil()
        .max(0.0) as usize
}

/// Checks the scenario and its probe design. Design failures are errors
/// unless the scenario acknowledges them.
pub fn validate_scenario(scenario: &ScenarioConfig) -> Result<(PlantModel, ValidationReport)> {
    let plant = scenario.check().map_err(ProbeError::Scenario)?;
    let omega_b = 2.0 * std::f64::consts::PI * scenario.analysis.bandwidth_hz;
    let report = validate_config(&scenario.probe, omega_b, scenario.analysis.memory_length);
    if !report.passed {
        if !scenario.analysis.acknowledge_violations {
            return Err(ProbeError::Validation(report));
        }
        log::warn!(
            "{}: probe design violations acknowledged: {:?}",
            scenario.id,
            report.binding
        );
    }
    Ok((plant, report))
}

/// Simulation inputs `(v, i_s)` at the simulation step. Each held sample
/// takes the sinusoids' value at the middle of its step, so the staircase
/// carries no half-step delay.
pub fn simulation_inputs(scenario: &ScenarioConfig, probe: &Waveform) -> Result<[Waveform; 2], pcp_core::Error> {
    let dt = scenario.probe.sample_interval();
    let warm = warmup_chips(scenario) * scenario.probe.oversampling;
    let len = warm + probe.len();
    let f = scenario.probe.nominal_frequency;
    let w = 2.0 * std::f64::consts::PI * f;
    let op = scenario.operating_voltage;
    let mid = |k: usize| (k as f64 + 0.5) * dt;
    let v = (0..len)
        .map(|k| {
            let p = if k >= warm { probe.samples()[k - warm] } else { 0.0 };
            op.amplitude * (w * mid(k) + op.phase).sin() + p
        })
        .collect();
    let i_s = match &scenario.source {
        Some(s) => (0..len).map(|k| s.eval(f, mid(k))).collect(),
        None => vec![0.0; len],
    };
    Ok([
        Waveform::new(dt, 0.0, v, Unit::Volt)?,
        Waveform::new(dt, 0.0, i_s, Unit::Ampere)?,
    ])
}

/// Simulates the scenario and samples the terminal quantities once per chip.
pub fn measure(
    scenario: &ScenarioConfig,
    plant: &PlantModel,
    probe: &Waveform,
) -> Result<Measurements, pcp_core::Error> {
    let cfg = &scenario.probe;
    let q = cfg.oversampling;
    let inputs = simulation_inputs(scenario, probe)?;
    let current = simulate(plant, &inputs, &scenario.noise, cfg.sample_interval(), q)?;
    let t0 = cfg.bit_duration;
    let start = warmup_chips(scenario);
    let w = 2.0 * std::f64::consts::PI * cfg.nominal_frequency;
    let op = scenario.operating_voltage;
    let chip_probe: Vec<f64> = (0..current.len())
        .map(|j| {
            if j >= start {
                probe.samples()[(j - start) * q]
            } else {
                0.0
            }
        })
        .collect();
    let voltage = (0..current.len())
        .map(|j| op.amplitude * (w * j as f64 * t0 + op.phase).sin() + chip_probe[j])
        .collect();
    Ok(Measurements {
        probe: Waveform::new(t0, 0.0, chip_probe, Unit::Volt)?,
        voltage: Waveform::new(t0, 0.0, voltage, Unit::Volt)?,
        current,
        injection_start: start,
    })
}

/// Output SNR over the injected window from separate noiseless runs of the
/// operating point and the probe. `None` when there is no steady-state current.
pub fn output_snr(
    scenario: &ScenarioConfig,
    plant: &PlantModel,
    probe: &Waveform,
) -> Result<Option<f64>, pcp_core::Error> {
    let cfg = &scenario.probe;
    let [v, i_s] = simulation_inputs(scenario, probe)?;
    let warm = warmup_chips(scenario) * cfg.oversampling;
    let probe_only: Vec<f64> = (0..v.len())
        .map(|k| if k >= warm { probe.samples()[k - warm] } else { 0.0 })
        .collect();
    let steady: Vec<f64> = v.samples().iter().zip(&probe_only).map(|(a, b)| a - b).collect();
    let zeros = Waveform::new(v.dt(), 0.0, vec![0.0; v.len()], Unit::Ampere)?;
    let run = |v: Vec<f64>, i_s: &Waveform| -> Result<Waveform, pcp_core::Error> {
        let v = Waveform::new(zeros.dt(), 0.0, v, Unit::Volt)?;
        let y = simulate(
            plant,
            &[v, i_s.clone()],
            &NoiseConfig::none(),
            cfg.sample_interval(),
            cfg.oversampling,
        )?;
        y.slice(warmup_chips(scenario), y.len())
    };
    let y_s = run(steady, &i_s)?;
    let y_p = run(probe_only, &zeros)?;
    match snr_db(&y_s, &y_p) {
        Ok(v) if y_s.rms() > 0.0 => Ok(Some(v)),
        Ok(_) | Err(pcp_core::Error::InfiniteSnr) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Direct discrete impulse response of the scenario plant over the memory length.
pub fn run_oracle(scenario: &ScenarioConfig) -> Result<Waveform> {
    let plant = scenario.check().map_err(ProbeError::Scenario)?;
    direct_impulse_response(&plant, scenario.probe.bit_duration, memory_samples(scenario)).map_err(ProbeError::Scenario)
}

struct Runner {
    run: ProbeRun,
}

impl Runner {
    fn stage<T>(&mut self, stage: Stage, f: impl FnOnce(&mut ProbeRun) -> Result<T, pcp_core::Error>) -> Result<T> {
        let start = Instant::now();
        let out = f(&mut self.run);
        self.run.timings.push(StageTiming {
            stage,
            seconds: start.elapsed().as_secs_f64(),
        });
        out.map_err(|source| {
            self.run.failure = Some(StageFailure {
                stage,
                message: source.to_string(),
            });
            ProbeError::Stage {
                stage,
                source,
                partial: Box::new(self.run.clone()),
            }
        })
    }
}

/// Runs every stage on one scenario. A stage error carries the partial run.
pub fn run_probe(scenario: &ScenarioConfig) -> Result<ProbeRun> {
    let start = Instant::now();
    let (plant, validation) = validate_scenario(scenario)?;
    let mut r = Runner {
        run: ProbeRun::new(scenario),
    };
    r.run.timings.push(StageTiming {
        stage: Stage::Validate,
        seconds: start.elapsed().as_secs_f64(),
    });
    r.run.validation = Some(validation);
    r.run.metrics.latency = Some(Latency::of(&scenario.probe));
    let cfg = &scenario.probe;
    let analysis = &scenario.analysis;
    let t0 = cfg.bit_duration;
    let f = cfg.nominal_frequency;

    let (chips, probe) = r.stage(Stage::Synthesize, |run| {
        let chips = generate_mls(cfg.order, None, None)?;
        let probe = synthesize_prbpt(&chips, cfg)?.with_unit(Unit::Volt);
        run.chips = Some(chips.clone());
        Ok((chips, probe))
    })?;

    let m = r.stage(Stage::Simulate, |run| {
        let m = measure(scenario, &plant, &probe)?;
        run.metrics.snr_db = output_snr(scenario, &plant, &probe)?;
        run.measurements = Some(m.clone());
        Ok(m)
    })?;

    let (filtered, notch) = r.stage(Stage::Notch, |run| {
        let (y, notch) = if analysis.notch {
            let notch = Notch::new(f, analysis.notch_quality, t0)?;
            (notch.filter(&m.current)?, Some(notch))
        } else {
            (m.current.clone(), None)
        };
        run.filtered_current = Some(y.clone());
        Ok((y, notch))
    })?;

    let z = r.stage(Stage::Correlate, |run| {
        let injected = filtered.slice(m.injection_start, filtered.len())?;
        let s = reference_signal(&chips, &cfg.chip_rate())?;
        let mut z = mls_unbias(&circular_xcorr(&injected, &s)?);
        if let (Some(notch), true) = (&notch, analysis.deembed_notch) {
            z = deembed_filter(&z, |w| notch.response(w))?;
        }
        let oracle = direct_impulse_response(&plant, t0, memory_samples(scenario))?;
        let k = oracle.len().min(z.len());
        run.metrics.impulse_nrmse = Some(nrmse(&z.samples()[..k], &oracle.samples()[..k]));
        run.oracle = Some(oracle);
        run.z_p = Some(z.clone());
        Ok(z)
    })?;

    let hankel = r.stage(Stage::Hankel, |run| {
        let markov = z.slice(1, z.len())?.with_t_start(t0);
        let window = analysis
            .hankel_window
            .unwrap_or_else(|| default_window(analysis.memory_length, t0, markov.len()));
        let h = build_hankel(&markov, window)?;
        run.metrics.hankel_window = Some(window);
        run.metrics.hankel_settled = Some(h.settled);
        Ok(h)
    })?;

    let order = r.stage(Stage::Order, |run| {
        let mut sel = select_order(&hankel, analysis.energy_threshold, analysis.force_order)?;
        if !sel.forced && sel.order > analysis.max_order {
            log::info!(
                "{}: energy criterion asks for {} states, capped at {}",
                run.id,
                sel.order,
                analysis.max_order
            );
            sel.order = analysis.max_order;
            let total: f64 = sel.spectrum.iter().sum();
            sel.captured = sel.spectrum[..sel.order].iter().sum::<f64>() / total;
        }
        run.metrics.order = Some(sel.order);
        run.metrics.energy_captured = Some(sel.captured);
        Ok(sel.order)
    })?;

    let model = r.stage(Stage::Realize, |run| {
        let model = balanced_realization(&hankel, order)?;
        run.metrics.markov_error = Some(model.markov_error);
        run.model = Some(model.clone());
        Ok(model)
    })?;

    let continuous = r.stage(Stage::Continuous, |run| {
        let c = to_continuous(&model)?;
        run.continuous = Some(c.clone());
        Ok(c)
    })?;

    let fit = r.stage(Stage::SecondOrder, |run| {
        let fit = to_second_order_tf(&continuous)?;
        run.metrics.truncation_bound = Some(fit.truncation_bound);
        run.fit = Some(fit.clone());
        Ok(fit)
    })?;

    let circuit = r.stage(Stage::Circuit, |run| {
        let p = tf_to_circuit(&fit.tf)?;
        if let Some(truth) = scenario.plant.circuit() {
            run.metrics.parameter_errors = Some(ParameterErrors::between(&truth, &p));
        }
        run.circuit = Some(p);
        Ok(p)
    })?;

    r.stage(Stage::Qsss, |run| {
        let track = track_qsss(
            &m.voltage,
            &m.current,
            &circuit,
            f,
            analysis.qsss_window_cycles / f,
            analysis.qsss_stride_cycles / f,
        )?;
        run.metrics.source_ratio = median_source_ratio(&track);
        run.qsss = Some(track);
        Ok(())
    })?;

    Ok(r.run)
}

fn median_source_ratio(track: &QsssTrack) -> Option<f64> {
    let mut ratios: Vec<f64> = track
        .points
        .iter()
        .filter(|p| p.current.magnitude > 0.0)
        .map(|p| p.source.magnitude / p.current.magnitude)
        .collect();
    if ratios.is_empty() {
        return None;
    }
    ratios.sort_by(f64::total_cmp);
    Some(ratios[ratios.len() / 2])
}

/// Runs scenarios in parallel, one worker each, results in input order.
pub fn run_batch(scenarios: &[ScenarioConfig]) -> Vec<Result<ProbeRun>> {
    scenarios.par_iter().map(run_probe).collect()
}

fn compare_parts(
    baseline: (&str, &ProbeConfig, Option<&CircuitParams>, Option<&Waveform>),
    candidate: (&str, &ProbeConfig, Option<&CircuitParams>, Option<&Waveform>),
    thresholds: &ChangeThresholds,
) -> Result<ModelDelta> {
    if baseline.1 != candidate.1 {
        return Err(ProbeError::Mismatch(format!(
            "{} and {} use different probe configurations",
            baseline.0, candidate.0
        )));
    }
    let circuit = |(id, _, c, _): (&str, &ProbeConfig, Option<&CircuitParams>, Option<&Waveform>)| {
        c.copied()
            .ok_or_else(|| ProbeError::Mismatch(format!("{id} has no identified circuit")))
    };
    let mut delta = detect_change(&circuit(baseline)?, &circuit(candidate)?, thresholds);
    if let (Some(a), Some(b)) = (baseline.3, candidate.3) {
        if a.len() == b.len() {
            delta.impulse_nrmse = Some(nrmse(b.samples(), a.samples()));
        }
    }
    Ok(delta)
}

/// Parameter changes from `baseline` to `candidate`, plus the NRMSE between
/// their impulse-response estimates.
pub fn compare_runs(baseline: &ProbeRun, candidate: &ProbeRun) -> Result<ModelDelta> {
    compare_runs_with(baseline, candidate, &ChangeThresholds::default())
}

pub fn compare_runs_with(
    baseline: &ProbeRun,
    candidate: &ProbeRun,
    thresholds: &ChangeThresholds,
) -> Result<ModelDelta> {
    compare_parts(
        (
            &baseline.id,
            &baseline.scenario.probe,
            baseline.circuit.as_ref(),
            baseline.z_p.as_ref(),
        ),
        (
            &candidate.id,
            &candidate.scenario.probe,
            candidate.circuit.as_ref(),
            candidate.z_p.as_ref(),
        ),
        thresholds,
    )
}

/// [`compare_runs`] on stored run records.
pub fn compare_records(
    baseline: &RunRecord,
    candidate: &RunRecord,
    thresholds: &ChangeThresholds,
) -> Result<ModelDelta> {
    compare_parts(
        (
            &baseline.id,
            &baseline.probe,
            baseline.circuit.as_ref(),
            baseline.z_p.as_ref(),
        ),
        (
            &candidate.id,
            &candidate.probe,
            candidate.circuit.as_ref(),
            candidate.z_p.as_ref(),
        ),
        thresholds,
    )
}

/// Names the parameters a delta flagged, for messages.
pub fn describe_delta(delta: &ModelDelta) -> String {
    PARAM_NAMES
        .iter()
        .zip(delta.relative)
        .map(|(n, r)| format!("{n} {:.1}%", 100.0 * r))
        .collect::<Vec<_>>()
        .join(", ")
}
