//! Probe configuration and waveform synthesis.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::mls::ChipSequence;
use crate::{Error, Result, Unit, Waveform};

/// Parameters of a pseudo-random binary pulse train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Shift-register order `n`; the sequence has `2^n - 1` chips.
    pub order: u32,
    /// Chip duration `t0` in seconds.
    pub bit_duration: f64,
    /// Probe amplitude in volts.
    pub amplitude: f64,
    /// Number of injected periods; correlation uses the last one.
    #[serde(default = "default_periods")]
    pub periods: usize,
    /// Simulation samples per chip.
    #[serde(default = "default_oversampling")]
    pub oversampling: usize,
    #[serde(default = "default_nominal_frequency")]
    pub nominal_frequency: f64,
}

fn default_periods() -> usize {
    2
}

fn default_oversampling() -> usize {
    10
}

fn default_nominal_frequency() -> f64 {
    60.0
}

impl ProbeConfig {
    pub fn new(order: u32, bit_duration: f64, amplitude: f64) -> Self {
        ProbeConfig {
            order,
            bit_duration,
            amplitude,
            periods: default_periods(),
            oversampling: default_oversampling(),
            nominal_frequency: default_nominal_frequency(),
        }
    }

    /// Chips per period, `2^n - 1`.
    pub fn chips_per_period(&self) -> usize {
        (1usize << self.order) - 1
    }

    /// Probe period `T_p = (2^n - 1) * t0`.
    pub fn period(&self) -> f64 {
        self.chips_per_period() as f64 * self.bit_duration
    }

    /// Simulation step `t0 / q`.
    pub fn sample_interval(&self) -> f64 {
        self.bit_duration / self.oversampling as f64
    }

    /// Total injected duration `P * T_p`.
    pub fn injected_duration(&self) -> f64 {
        self.periods as f64 * self.period()
    }

    /// Same probe, sampled once per chip.
    pub fn chip_rate(&self) -> ProbeConfig {
        ProbeConfig {
            oversampling: 1,
            ..self.clone()
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(super::mls::MIN_ORDER..=super::mls::MAX_ORDER).contains(&self.order) {
            return Err(Error::UnsupportedOrder(self.order));
        }
        if !(self.bit_duration > 0.0) || !self.bit_duration.is_finite() {
            return Err(Error::param("bit_duration", "must be positive"));
        }
        if !(self.amplitude > 0.0) || !self.amplitude.is_finite() {
            return Err(Error::param("amplitude", "must be positive"));
        }
        if self.periods == 0 {
            return Err(Error::param("periods", "at least one period must be injected"));
        }
        if self.oversampling == 0 {
            return Err(Error::param("oversampling", "must be at least 1"));
        }
        if !(self.nominal_frequency > 0.0) {
            return Err(Error::param("nominal_frequency", "must be positive"));
        }
        Ok(())
    }

    fn check_chips(&self, chips: &ChipSequence) -> Result<()> {
        self.check()?;
        if chips.order != self.order {
            return Err(Error::OrderMismatch {
                chips: chips.order,
                config: self.order,
            });
        }
        Ok(())
    }
}

/// The probe `p(t)`: every chip held for `q` samples, scaled by the amplitude,
/// repeated for the configured number of periods.
pub fn synthesize_prbpt(chips: &ChipSequence, config: &ProbeConfig) -> Result<Waveform> {
    config.check_chips(chips)?;
    let q = config.oversampling;
    let mut samples = Vec::with_capacity(config.periods * chips.len() * q);
    for _ in 0..config.periods {
        for c in chips.iter() {
            samples.extend(core::iter::repeat_n(config.amplitude * c, q));
        }
    }
    Waveform::new(config.sample_interval(), 0.0, samples, Unit::Volt)
}

/// One period of the reference `s(t)`: the probe pattern with magnitude
/// `1 / (amplitude * T_p)`.
pub fn reference_signal(chips: &ChipSequence, config: &ProbeConfig) -> Result<Waveform> {
    config.check_chips(chips)?;
    let q = config.oversampling;
    let scale = 1.0 / (config.amplitude * config.period());
    let samples = chips
        .iter()
        .flat_map(|c| core::iter::repeat_n(c * scale, q))
        .collect();
    Waveform::new(config.sample_interval(), 0.0, samples, Unit::PerVoltSecond)
}

/// Outcome of one probe design rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub name: String,
    pub passed: bool,
    /// Limit imposed by the rule, in the rule's own unit.
    pub limit: f64,
    /// Value the configuration actually has.
    pub actual: f64,
    /// Relative slack; negative when violated.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<ConstraintCheck>,
    /// The violated rule with the least slack, or the tightest rule when all pass.
    pub binding: Option<String>,
}

impl ValidationReport {
    pub fn check(&self, name: &str) -> Option<&ConstraintCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const BIT_DURATION_RULE: &str = "bit_duration";
pub const ORDER_RULE: &str = "order";
pub const MEMORY_RULE: &str = "memory_length";

/// Checks a probe design against the plant bandwidth `omega_b` (rad/s) and
/// the impulse-response memory length (seconds).
///
/// Rules: `t0 <= 2π / (5 ω_B)`, `n >= log2(T_p / t0 + 1)` and `T_p >= memory`.
pub fn validate_config(config: &ProbeConfig, omega_b: f64, memory_length: f64) -> ValidationReport {
    let t0 = config.bit_duration;
    let tp = config.period();
    let t0_limit = 2.0 * PI / (5.0 * omega_b);
    // The period is built from the order, so round away representation noise
    // before taking the ceiling.
    let required_order = ((tp / t0 + 1.0).log2() - 1e-9).ceil();
    let order = f64::from(config.order);

    let checks = alloc::vec![
        ConstraintCheck {
            name: BIT_DURATION_RULE.into(),
            passed: t0 <= t0_limit,
            limit: t0_limit,
            actual: t0,
            margin: 1.0 - t0 / t0_limit,
        },
        ConstraintCheck {
            name: ORDER_RULE.into(),
            passed: order >= required_order,
            limit: required_order,
            actual: order,
            margin: (order - required_order) / required_order.max(1.0),
        },
        ConstraintCheck {
            name: MEMORY_RULE.into(),
            passed: tp >= memory_length,
            limit: memory_length,
            actual: tp,
            margin: if memory_length > 0.0 {
                tp / memory_length - 1.0
            } else {
                f64::INFINITY
            },
        },
    ];
    let passed = checks.iter().all(|c| c.passed);
    let binding = checks
        .iter()
        .filter(|c| c.passed == passed)
        .min_by(|a, b| a.margin.total_cmp(&b.margin))
        .map(|c| c.name.clone());
    ValidationReport {
        passed,
        checks,
        binding,
    }
}
