//! The second-order equivalent circuit seen at the feeder terminal: a series
//! branch `R1 + sL` feeding a shunt `R2 ∥ C`, with the aggregated source
//! current injected into the shunt node.
//!
//! Its admittance is
//!
//! ```text
//!  I     s/L + 1/(L R2 C)
//! --- = ------------------------------------------------
//!  V     s² + (L + R1 R2 C)/(L R2 C) s + (R1 + R2)/(L R2 C)
//! ```
//!
//! and every coefficient set with `a ≠ 0`, `b ≠ 0` maps back onto a unique
//! `(L, R1, R2, C)`. `R1` routinely comes out negative; the circuit is a
//! fitting device, not a physical network.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ident::TransferFunction2;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    /// Series inductance, henries.
    #[serde(rename = "L")]
    pub l: f64,
    /// Series resistance, ohms. May be negative.
    #[serde(rename = "R1")]
    pub r1: f64,
    /// Shunt resistance, ohms.
    #[serde(rename = "R2")]
    pub r2: f64,
    /// Shunt capacitance, farads.
    #[serde(rename = "C")]
    pub c: f64,
}

impl CircuitParams {
    pub const fn new(l: f64, r1: f64, r2: f64, c: f64) -> Self {
        CircuitParams { l, r1, r2, c }
    }

    /// Construct from engineering units: mH, Ω, Ω, µF.
    pub fn from_table_units(l_mh: f64, r1: f64, r2: f64, c_uf: f64) -> Self {
        CircuitParams::new(l_mh * 1e-3, r1, r2, c_uf * 1e-6)
    }

    pub fn check(&self) -> Result<()> {
        if !self.l.is_finite() || self.l <= 0.0 {
            return Err(Error::param("L", "must be positive"));
        }
        if !self.c.is_finite() || self.c <= 0.0 {
            return Err(Error::param("C", "must be positive"));
        }
        if !self.r2.is_finite() || self.r2 == 0.0 {
            return Err(Error::param("R2", "must be nonzero"));
        }
        if !self.r1.is_finite() {
            return Err(Error::param("R1", "must be finite"));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.l, self.r1, self.r2, self.c]
    }
}

pub const PARAM_NAMES: [&str; 4] = ["L", "R1", "R2", "C"];

/// Admittance coefficients of the circuit.
pub fn circuit_to_tf(p: &CircuitParams) -> Result<TransferFunction2> {
    p.check()?;
    let k = p.l * p.r2 * p.c;
    Ok(TransferFunction2 {
        a: 1.0 / p.l,
        b: 1.0 / k,
        c: (p.l + p.r1 * p.r2 * p.c) / k,
        d: (p.r1 + p.r2) / k,
    })
}

/// Closed-form inverse of [`circuit_to_tf`]:
/// `L = 1/a`, `R1 = (ac - b)/a²`, `R2 = (da² - abc + b²)/(ba²)`,
/// `C = a³/(da² - abc + b²)`.
pub fn tf_to_circuit(tf: &TransferFunction2) -> Result<CircuitParams> {
    let TransferFunction2 { a, b, c, d } = *tf;
    if a == 0.0 || !a.is_finite() {
        return Err(Error::DegenerateCircuit("a = 0: no inductive series path".into()));
    }
    if b == 0.0 || !b.is_finite() {
        return Err(Error::DegenerateCircuit("b = 0: R2 and C are unbounded".into()));
    }
    let a2 = a * a;
    let den = d * a2 - a * b * c + b * b;
    let scale = (d * a2).abs().max((a * b * c).abs()).max(b * b);
    if den.abs() < 1e-9 * scale {
        return Err(Error::DegenerateCircuit(alloc::format!(
            "d a² - a b c + b² = {den:e} vanishes against terms of size {scale:e}"
        )));
    }
    let params = CircuitParams {
        l: 1.0 / a,
        r1: (a * c - b) / a2,
        r2: den / (b * a2),
        c: a2 * a / den,
    };
    if params.l <= 0.0 {
        return Err(Error::NotRealizable(alloc::format!(
            "L = {:e} H is not positive; the response is not that of a series-inductive feeder",
            params.l
        )));
    }
    if params.c <= 0.0 {
        return Err(Error::NotRealizable(alloc::format!(
            "C = {:e} F is not positive",
            params.c
        )));
    }
    Ok(params)
}

/// Relative-change limits per parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangeThresholds {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "R2")]
    pub r2: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl ChangeThresholds {
    pub const fn uniform(fraction: f64) -> Self {
        ChangeThresholds {
            l: fraction,
            r1: fraction,
            r2: fraction,
            c: fraction,
        }
    }

    fn as_array(&self) -> [f64; 4] {
        [self.l, self.r1, self.r2, self.c]
    }
}

impl Default for ChangeThresholds {
    fn default() -> Self {
        ChangeThresholds::uniform(0.10)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDelta {
    pub baseline: CircuitParams,
    pub current: CircuitParams,
    /// `|current - baseline| / |baseline|` in `L, R1, R2, C` order.
    pub relative: [f64; 4],
    pub thresholds: ChangeThresholds,
    /// Names of the parameters that moved past their threshold.
    pub exceeded: Vec<String>,
    pub flagged: bool,
    /// Impulse-response NRMSE between the two probing outputs, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impulse_nrmse: Option<f64>,
}

impl ModelDelta {
    pub fn relative_change(&self, name: &str) -> Option<f64> {
        PARAM_NAMES.iter().position(|n| *n == name).map(|i| self.relative[i])
    }
}

pub fn detect_change(baseline: &CircuitParams, current: &CircuitParams, thresholds: &ChangeThresholds) -> ModelDelta {
    let base = baseline.as_array();
    let cur = current.as_array();
    let limits = thresholds.as_array();
    let mut relative = [0.0; 4];
    let mut exceeded = Vec::new();
    for i in 0..4 {
        relative[i] = if base[i] == 0.0 {
            if cur[i] == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (cur[i] - base[i]).abs() / base[i].abs()
        };
        if relative[i] > limits[i] {
            exceeded.push(PARAM_NAMES[i].to_string());
        }
    }
    ModelDelta {
        baseline: *baseline,
        current: *current,
        relative,
        thresholds: *thresholds,
        flagged: !exceeded.is_empty(),
        exceeded,
        impulse_nrmse: None,
    }
}
