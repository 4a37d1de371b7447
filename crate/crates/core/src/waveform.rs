use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative tolerance used when comparing sample intervals.
const DT_RTOL: f64 = 1e-9;

/// Physical unit carried by a [`Waveform`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum Unit {
    Volt,
    Ampere,
    /// Admittance-like quantities such as an impulse response from volts to amperes.
    AmperePerVolt,
    /// The reference signal: volts inverted and divided by the probe period.
    PerVoltSecond,
    Dimensionless,
    Other(String),
}

impl Unit {
    pub fn label(&self) -> &str {
        match self {
            Unit::Volt => "V",
            Unit::Ampere => "A",
            Unit::AmperePerVolt => "A/V",
            Unit::PerVoltSecond => "1/(V*s)",
            Unit::Dimensionless => "1",
            Unit::Other(s) => s,
        }
    }

    pub fn parse(label: &str) -> Unit {
        match label {
            "V" => Unit::Volt,
            "A" => Unit::Ampere,
            "A/V" => Unit::AmperePerVolt,
            "1/(V*s)" => Unit::PerVoltSecond,
            "1" | "" | "dimensionless" => Unit::Dimensionless,
            other => Unit::Other(String::from(other)),
        }
    }

    /// Unit of `x ⊗ s · dt` when `x` has this unit and `s` is the probe reference.
    pub fn correlated_with(&self, reference: &Unit) -> Unit {
        match (self, reference) {
            (Unit::Ampere, Unit::PerVoltSecond) => Unit::AmperePerVolt,
            (Unit::Volt, Unit::PerVoltSecond) => Unit::Dimensionless,
            (Unit::Dimensionless, other) | (other, Unit::Dimensionless) => other.clone(),
            (a, b) => Unit::Other(alloc::format!("{}*{}*s", a.label(), b.label())),
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl From<Unit> for String {
    fn from(u: Unit) -> String {
        String::from(u.label())
    }
}

impl From<String> for Unit {
    fn from(s: String) -> Unit {
        Unit::parse(&s)
    }
}

/// A uniformly sampled real signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    dt: f64,
    t_start: f64,
    samples: Vec<f64>,
    unit: Unit,
}

impl Waveform {
    pub fn new(dt: f64, t_start: f64, samples: Vec<f64>, unit: Unit) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::param("dt", alloc::format!("must be positive, got {dt}")));
        }
        if samples.is_empty() {
            return Err(Error::param("samples", "waveform must be nonempty"));
        }
        Ok(Waveform {
            dt,
            t_start,
            samples,
            unit,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn unit(&self) -> &Unit {
        &self.unit
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time of sample `k`.
    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    /// Covered duration, `len * dt`.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }

    /// Same samples on a time axis starting at `t_start`.
    pub fn with_t_start(mut self, t_start: f64) -> Self {
        self.t_start = t_start;
        self
    }

    pub fn with_unit(mut self, unit: Unit) -> Self {
        self.unit = unit;
        self
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    pub fn scaled(&self, k: f64) -> Waveform {
        Waveform {
            samples: self.samples.iter().map(|x| x * k).collect(),
            ..self.clone()
        }
    }

    /// Sample-wise sum; both waveforms must share `dt` and length.
    pub fn try_add(&self, other: &Waveform) -> Result<Waveform> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &Waveform) -> Result<Waveform> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Waveform, f: impl Fn(f64, f64) -> f64) -> Result<Waveform> {
        self.check_compatible(other)?;
        Ok(Waveform {
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            ..self.clone()
        })
    }

    pub fn check_same_dt(&self, other: &Waveform) -> Result<()> {
        if same_dt(self.dt, other.dt) {
            Ok(())
        } else {
            Err(Error::DtMismatch {
                left: self.dt,
                right: other.dt,
            })
        }
    }

    pub fn check_compatible(&self, other: &Waveform) -> Result<()> {
        self.check_same_dt(other)?;
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    /// Samples `start..end`, with `t_start` moved accordingly.
    pub fn slice(&self, start: usize, end: usize) -> Result<Waveform> {
        if start >= end || end > self.len() {
            return Err(Error::param(
                "slice",
                alloc::format!("{start}..{end} out of range for {} samples", self.len()),
            ));
        }
        Ok(Waveform {
            dt: self.dt,
            t_start: self.time(start),
            samples: self.samples[start..end].to_vec(),
            unit: self.unit.clone(),
        })
    }

    /// Every `factor`-th sample, starting with the first.
    pub fn decimate(&self, factor: usize) -> Result<Waveform> {
        if factor == 0 {
            return Err(Error::param("decimation factor", "must be at least 1"));
        }
        Ok(Waveform {
            dt: self.dt * factor as f64,
            t_start: self.t_start,
            samples: self.samples.iter().step_by(factor).copied().collect(),
            unit: self.unit.clone(),
        })
    }
}

pub(crate) fn same_dt(a: f64, b: f64) -> bool {
    (a - b).abs() <= DT_RTOL * a.abs().max(b.abs())
}

pub(crate) fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Root-mean-square error between `estimate` and `reference` over their common
/// prefix, normalized by the peak magnitude of `reference`.
pub fn nrmse(estimate: &[f64], reference: &[f64]) -> f64 {
    let n = estimate.len().min(reference.len());
    if n == 0 {
        return 0.0;
    }
    let peak = reference[..n].iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    let err = estimate[..n]
        .iter()
        .zip(&reference[..n])
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n as f64;
    if peak == 0.0 {
        return if err == 0.0 { 0.0 } else { f64::INFINITY };
    }
    err.sqrt() / peak
}
