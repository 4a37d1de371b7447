use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{build_ladder_plant, build_plant_from_circuit, LadderSection, NoiseConfig, PlantModel, SourceSchedule};
use crate::circuit::CircuitParams;
use crate::ident::Domain;
use crate::linalg::Matrix;
use crate::signals::ProbeConfig;
use crate::{Error, Result};

/// How the plant under test is described in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlantSpec {
    Circuit(CircuitParams),
    Ladder {
        sections: Vec<LadderSection>,
    },
    /// Continuous-time matrices, row by row. `B` has one column per input.
    StateSpace {
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        c: Vec<Vec<f64>>,
        d: Vec<Vec<f64>>,
    },
}

fn rows_to_matrix(name: &'static str, rows: &[Vec<f64>], cols_if_empty: usize) -> Result<Matrix> {
    let cols = rows.first().map_or(cols_if_empty, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::param(name, "rows have different lengths"));
    }
    Ok(Matrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

impl PlantSpec {
    pub fn build(&self) -> Result<PlantModel> {
        match self {
            PlantSpec::Circuit(p) => build_plant_from_circuit(p),
            PlantSpec::Ladder { sections } => build_ladder_plant(sections),
            PlantSpec::StateSpace { a, b, c, d } => {
                let a = rows_to_matrix("a", a, 0)?;
                let b = rows_to_matrix("b", b, 0)?;
                let c = rows_to_matrix("c", c, a.nrows())?;
                let d = rows_to_matrix("d", d, b.ncols())?;
                PlantModel::new(a, b, c, d, Domain::Continuous)
            }
        }
    }

    /// Ground-truth circuit, when the plant is one.
    pub fn circuit(&self) -> Option<CircuitParams> {
        match self {
            PlantSpec::Circuit(p) => Some(*p),
            _ => None,
        }
    }
}

/// Operating voltage `amplitude · sin(2πf t + phase)` at the terminal, volts peak.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OperatingVoltage {
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Processing choices applied to a scenario's measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    /// Seconds after which the impulse response is taken to have decayed.
    pub memory_length: f64,
    /// Operating time before the probe starts, so the notch filter settles.
    pub warmup: f64,
    /// Notch the nominal frequency out of the measured current.
    pub notch: bool,
    pub notch_quality: f64,
    /// Divide the notch response back out of the correlation output.
    pub deembed_notch: bool,
    /// Hankel window `m`; derived from the memory length when absent.
    pub hankel_window: Option<usize>,
    pub energy_threshold: f64,
    /// Largest order accepted from the energy criterion.
    pub max_order: usize,
    pub force_order: Option<usize>,
    /// Plant bandwidth used by the bit-duration check, hertz.
    pub bandwidth_hz: f64,
    /// Phasor window and stride in nominal cycles.
    pub qsss_window_cycles: f64,
    pub qsss_stride_cycles: f64,
    /// Run even when the probe design fails its checks.
    pub acknowledge_violations: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            memory_length: 0.05,
            warmup: 0.25,
            notch: true,
            notch_quality: crate::signals::DEFAULT_QUALITY,
            deembed_notch: true,
            hankel_window: None,
            energy_threshold: 0.99,
            max_order: 10,
            force_order: None,
            bandwidth_hz: 700.0,
            qsss_window_cycles: 2.0,
            qsss_stride_cycles: 1.0,
            acknowledge_violations: false,
        }
    }
}

impl AnalysisConfig {
    pub fn check(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, "must be positive"))
            }
        };
        positive("memory_length", self.memory_length)?;
        positive("notch_quality", self.notch_quality)?;
        positive("bandwidth_hz", self.bandwidth_hz)?;
        positive("qsss_window_cycles", self.qsss_window_cycles)?;
        positive("qsss_stride_cycles", self.qsss_stride_cycles)?;
        if !(self.warmup >= 0.0) || !self.warmup.is_finite() {
            return Err(Error::param("warmup", "must be non-negative"));
        }
        if !(self.energy_threshold > 0.0 && self.energy_threshold <= 1.0) {
            return Err(Error::param("energy_threshold", "must lie in (0, 1]"));
        }
        if self.max_order == 0 || self.force_order == Some(0) || self.hankel_window == Some(0) {
            return Err(Error::param("order", "orders and windows must be at least 1"));
        }
        Ok(())
    }
}

/// Everything needed to reproduce one probing experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub plant: PlantSpec,
    #[serde(default)]
    pub operating_voltage: OperatingVoltage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceSchedule>,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub probe: ProbeConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    /// Scenario whose identified circuit this one is compared against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<String>,
}

impl ScenarioConfig {
    pub fn new(id: impl Into<String>, plant: PlantSpec, probe: ProbeConfig) -> Self {
        ScenarioConfig {
            id: id.into(),
            description: String::new(),
            plant,
            operating_voltage: OperatingVoltage::default(),
            source: None,
            noise: NoiseConfig::none(),
            probe,
            analysis: AnalysisConfig::default(),
            baseline: None,
        }
    }

    /// Simulated time: warmup plus every injected period.
    pub fn horizon(&self) -> f64 {
        self.analysis.warmup + self.probe.injected_duration()
    }

    /// Builds the plant and checks every part of the scenario for consistency.
    pub fn check(&self) -> Result<PlantModel> {
        if self.id.is_empty() || self.id.contains(['/', '\\']) {
            return Err(Error::param("id", "must be a nonempty name without path separators"));
        }
        self.probe.check()?;
        self.noise.check()?;
        self.analysis.check()?;
        if let Some(s) = &self.source {
            s.check()?;
        }
        if !self.operating_voltage.amplitude.is_finite() || !self.operating_voltage.phase.is_finite() {
            return Err(Error::param("operating_voltage", "must be finite"));
        }
        let plant = self.plant.build()?;
        plant.check_stable()?;
        if plant.inputs() != 2 || plant.outputs() != 1 {
            return Err(Error::Dimension(alloc::format!(
                "scenario plants take (V, I_s) and return I; got {} inputs, {} outputs",
                plant.inputs(),
                plant.outputs()
            )));
        }
        Ok(plant)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_space_spec_builds() {
        let spec = PlantSpec::StateSpace {
            a: alloc::vec![alloc::vec![-10.0]],
            b: alloc::vec![alloc::vec![1.0, 0.0]],
            c: alloc::vec![alloc::vec![1.0]],
            d: alloc::vec![alloc::vec![0.0, 0.0]],
        };
        let plant = spec.build().unwrap();
        assert_eq!(plant.order(), 1);
        let ragged = PlantSpec::StateSpace {
            a: alloc::vec![alloc::vec![-10.0, 0.0], alloc::vec![1.0]],
            b: alloc::vec![],
            c: alloc::vec![],
            d: alloc::vec![],
        };
        assert!(ragged.build().is_err());
    }

    #[test]
    fn scenario_checks_stability() {
        let probe = ProbeConfig::new(10, 1e-4, 50.0);
        let good = ScenarioConfig::new(
            "normal",
            PlantSpec::Circuit(CircuitParams::from_table_units(14.72, -1.402, 24.58, 34.52)),
            probe.clone(),
        );
        assert!(good.check().is_ok());
        // Enough negative series resistance to destabilize.
        let bad = ScenarioConfig::new(
            "bad",
            PlantSpec::Circuit(CircuitParams::from_table_units(14.72, -30.0, 24.58, 34.52)),
            probe,
        );
        assert!(matches!(bad.check(), Err(Error::Unstable { .. })));
    }
}
