//! File formats.
//!
//! Waveforms are CSV with a one-line header, `# dt=<sec> t_start=<sec>
//! unit=<label>`, and one sample per line at 17 significant digits. Chip
//! sequences, scenarios, models and runs are JSON.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use pcp_core::ident::{Domain, RealizedModel};
use pcp_core::plant::ScenarioConfig;
use pcp_core::qsss::QsssTrack;
use pcp_core::signals::ChipSequence;
use pcp_core::{Unit, Waveform};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ProbeError, Result};

pub const QSSS_HEADER: &str = "t,V_mag,V_ang,I_mag,I_ang,Is_mag,Is_ang,P,Q";
pub const CIRCUIT_TABLE_HEADER: &str = "scenario,L_mH,R1_ohm,R2_ohm,C_uF,flagged";

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| ProbeError::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| ProbeError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| ProbeError::json(path, e))?;
    text.push('\n');
    write(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read(path)?).map_err(|e| ProbeError::json(path, e))
}

pub fn waveform_to_csv(w: &Waveform) -> String {
    let mut out = String::with_capacity(w.len() * 24 + 64);
    writeln!(
        out,
        "# dt={:.16e} t_start={:.16e} unit={}",
        w.dt(),
        w.t_start(),
        w.unit().label()
    )
    .unwrap();
    for v in w.samples() {
        writeln!(out, "{v:.16e}").unwrap();
    }
    out
}

pub fn waveform_from_csv(text: &str, origin: &Path) -> Result<Waveform> {
    let parse_err = |line: usize, message: String| ProbeError::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file".into()))?;
    let header = header
        .strip_prefix('#')
        .ok_or_else(|| parse_err(1, "missing `# dt=... t_start=... unit=...` header".into()))?;
    let (mut dt, mut t_start, mut unit) = (None, None, None);
    for field in header.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| parse_err(1, format!("malformed header field `{field}`")))?;
        let number = || value.parse::<f64>().map_err(|e| parse_err(1, format!("{key}: {e}")));
        match key {
            "dt" => dt = Some(number()?),
            "t_start" => t_start = Some(number()?),
            "unit" => unit = Some(Unit::parse(value)),
            other => return Err(parse_err(1, format!("unknown header field `{other}`"))),
        }
    }
    let dt = dt.ok_or_else(|| parse_err(1, "header lacks dt".into()))?;
    let t_start = t_start.ok_or_else(|| parse_err(1, "header lacks t_start".into()))?;
    let unit = unit.ok_or_else(|| parse_err(1, "header lacks unit".into()))?;
    let mut samples = Vec::new();
    for (k, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        samples.push(line.parse::<f64>().map_err(|e| parse_err(k + 1, e.to_string()))?);
    }
    Waveform::new(dt, t_start, samples, unit).map_err(|e| parse_err(1, e.to_string()))
}

pub fn write_waveform(path: &Path, w: &Waveform) -> Result<()> {
    write(path, &waveform_to_csv(w))
}

pub fn read_waveform(path: &Path) -> Result<Waveform> {
    waveform_from_csv(&read(path)?, path)
}

pub fn write_chips(path: &Path, chips: &ChipSequence) -> Result<()> {
    write_json(path, chips)
}

pub fn read_chips(path: &Path) -> Result<ChipSequence> {
    read_json(path)
}

pub fn read_scenarios(path: &Path) -> Result<Vec<ScenarioConfig>> {
    let value: serde_json::Value = read_json(path)?;
    let scenarios = if value.is_array() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value(value).map(|s| vec![s])
    };
    scenarios.map_err(|e| ProbeError::json(path, e))
}

/// SHA-256 of the scenario's canonical JSON.
pub fn scenario_hash(scenario: &ScenarioConfig) -> String {
    let bytes = serde_json::to_vec(scenario).expect("scenario serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// A state-space model in plain rows, for JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub order: usize,
    pub domain: Domain,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: f64,
    pub hankel_singular_values: Vec<f64>,
    pub markov_error: f64,
}

impl From<&RealizedModel> for ModelRecord {
    fn from(m: &RealizedModel) -> Self {
        let n = m.order();
        ModelRecord {
            order: n,
            domain: m.domain,
            a: (0..n).map(|i| (0..n).map(|j| m.a[(i, j)]).collect()).collect(),
            b: (0..n).map(|i| m.b[(i, 0)]).collect(),
            c: (0..n).map(|j| m.c[(0, j)]).collect(),
            d: m.d,
            hankel_singular_values: m.hankel_singular_values.clone(),
            markov_error: m.markov_error,
        }
    }
}

impl ModelRecord {
    pub fn to_model(&self) -> RealizedModel {
        let n = self.order;
        RealizedModel {
            a: nalgebra::DMatrix::from_fn(n, n, |i, j| self.a[i][j]),
            b: nalgebra::DMatrix::from_fn(n, 1, |i, _| self.b[i]),
            c: nalgebra::DMatrix::from_fn(1, n, |_, j| self.c[j]),
            d: self.d,
            domain: self.domain,
            hankel_singular_values: self.hankel_singular_values.clone(),
            markov_error: self.markov_error,
        }
    }
}

/// Where a model came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub scenario: String,
    /// SHA-256 of the scenario that produced the model.
    pub scenario_sha256: String,
    pub tool: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub provenance: Provenance,
    pub model: ModelRecord,
}

pub fn write_model(path: &Path, model: &RealizedModel, scenario: &ScenarioConfig) -> Result<()> {
    let file = ModelFile {
        provenance: Provenance {
            scenario: scenario.id.clone(),
            scenario_sha256: scenario_hash(scenario),
            tool: concat!("pcp-probe ", env!("CARGO_PKG_VERSION")).to_string(),
        },
        model: model.into(),
    };
    write_json(path, &file)
}

pub fn qsss_to_csv(track: &QsssTrack) -> String {
    let mut out = String::with_capacity(track.len() * 220 + 64);
    out.push_str(QSSS_HEADER);
    out.push('\n');
    for p in &track.points {
        let row = [
            p.t,
            p.voltage.magnitude,
            p.voltage.angle,
            p.current.magnitude,
            p.current.angle,
            p.source.magnitude,
            p.source.angle,
            p.active_power,
            p.reactive_power,
        ];
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Rows of a QSSS CSV as numbers, header checked.
pub fn qsss_rows_from_csv(text: &str, origin: &Path) -> Result<Vec<[f64; 9]>> {
    let mut lines = text.lines();
    if lines.next() != Some(QSSS_HEADER) {
        return Err(ProbeError::Parse {
            path: origin.to_path_buf(),
            line: 1,
            message: format!("expected header `{QSSS_HEADER}`"),
        });
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, line)| {
            let values: Vec<f64> = line
                .split(',')
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e: std::num::ParseFloatError| ProbeError::Parse {
                    path: origin.to_path_buf(),
                    line: k + 2,
                    message: e.to_string(),
                })?;
            values.try_into().map_err(|v: Vec<f64>| ProbeError::Parse {
                path: origin.to_path_buf(),
                line: k + 2,
                message: format!("expected 9 columns, found {}", v.len()),
            })
        })
        .collect()
}

pub fn write_qsss(path: &Path, track: &QsssTrack) -> Result<()> {
    write(path, &qsss_to_csv(track))
}

pub fn read_qsss(path: &Path) -> Result<Vec<[f64; 9]>> {
    qsss_rows_from_csv(&read(path)?, path)
}

/// One row of the circuit table; parameters are absent for failed runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitRow {
    pub scenario: String,
    pub circuit: Option<pcp_core::circuit::CircuitParams>,
    pub flagged: bool,
}

pub fn circuit_table_to_csv(rows: &[CircuitRow]) -> String {
    let mut out = String::from(CIRCUIT_TABLE_HEADER);
    out.push('\n');
    for row in rows {
        match &row.circuit {
            Some(p) => writeln!(
                out,
                "{},{},{},{},{},{}",
                row.scenario,
                p.l * 1e3,
                p.r1,
                p.r2,
                p.c * 1e6,
                row.flagged
            ),
            None => writeln!(out, "{},,,,,{}", row.scenario, row.flagged),
        }
        .unwrap();
    }
    out
}

pub fn circuit_table_from_csv(text: &str, origin: &Path) -> Result<Vec<CircuitRow>> {
    let err = |line: usize, message: String| ProbeError::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines();
    if lines.next() != Some(CIRCUIT_TABLE_HEADER) {
        return Err(err(1, format!("expected header `{CIRCUIT_TABLE_HEADER}`")));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, line)| {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 6 {
                return Err(err(k + 2, format!("expected 6 columns, found {}", cells.len())));
            }
            let flagged = cells[5].parse::<bool>().map_err(|e| err(k + 2, e.to_string()))?;
            let circuit = if cells[1..5].iter().all(|c| c.is_empty()) {
                None
            } else {
                let v: Vec<f64> = cells[1..5]
                    .iter()
                    .map(|c| c.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| err(k + 2, e.to_string()))?;
                Some(pcp_core::circuit::CircuitParams::from_table_units(
                    v[0], v[1], v[2], v[3],
                ))
            };
            Ok(CircuitRow {
                scenario: cells[0].to_string(),
                circuit,
                flagged,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn waveform_csv_round_trip_is_exact() {
        let w = Waveform::new(1e-4, -0.25, vec![0.1, -1.0 / 3.0, 1e-300, 6.02e23], Unit::PerVoltSecond).unwrap();
        let text = waveform_to_csv(&w);
        assert!(text.starts_with("# dt=1.0000000000000000e-4 t_start=-2.5000000000000000e-1 unit=1/(V*s)\n"));
        assert_eq!(waveform_from_csv(&text, Path::new("x")).unwrap(), w);
    }

    #[test]
    fn malformed_csv_is_reported_with_line() {
        let err = waveform_from_csv("# dt=1 t_start=0 unit=A\n1.0\nabc\n", Path::new("w.csv")).unwrap_err();
        assert!(err.to_string().starts_with("w.csv:3:"), "{err}");
        assert!(waveform_from_csv("1.0\n", Path::new("w.csv")).is_err());
        assert!(waveform_from_csv("# dt=1 unit=A\n1.0\n", Path::new("w.csv")).is_err());
    }

    #[test]
    fn circuit_table_round_trip() {
        let rows = vec![
            CircuitRow {
                scenario: "normal".into(),
                circuit: Some(pcp_core::circuit::CircuitParams::from_table_units(
                    14.72, -1.402, 24.58, 34.52,
                )),
                flagged: false,
            },
            CircuitRow {
                scenario: "broken".into(),
                circuit: None,
                flagged: true,
            },
        ];
        let text = circuit_table_to_csv(&rows);
        assert_eq!(text.lines().next().unwrap(), "scenario,L_mH,R1_ohm,R2_ohm,C_uF,flagged");
        assert_eq!(text.lines().nth(2).unwrap(), "broken,,,,,true");
        let back = circuit_table_from_csv(&text, Path::new("t")).unwrap();
        assert_eq!(back[1], rows[1]);
        let (a, b) = (back[0].circuit.unwrap(), rows[0].circuit.unwrap());
        assert!((a.l - b.l).abs() < 1e-15 && (a.c - b.c).abs() < 1e-18 && a.r1 == b.r1 && a.r2 == b.r2);
    }
}
