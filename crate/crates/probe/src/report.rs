//! Report assembly and the files written for a batch of runs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use pcp_core::circuit::{CircuitParams, ModelDelta};
use pcp_core::ident::{FitFlags, TransferFunction2};
use pcp_core::signals::ProbeConfig;
use serde::{Deserialize, Serialize};

use crate::error::{ProbeError, Result};
use crate::io::{self, CircuitRow};
use crate::pipeline::{compare_runs, ProbeRun, RunMetrics, StageFailure, StageTiming};

pub const FORMAT_VERSION: u32 = 1;

/// One row of the report. Timings are kept out so reports are reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub id: String,
    pub scenario_sha256: String,
    pub probe: ProbeConfig,
    pub validation_passed: Option<bool>,
    pub tf: Option<TransferFunction2>,
    pub fit_flags: Option<FitFlags>,
    pub circuit: Option<CircuitParams>,
    pub metrics: RunMetrics,
    pub failure: Option<StageFailure>,
}

impl From<&ProbeRun> for RunSummary {
    fn from(run: &ProbeRun) -> Self {
        RunSummary {
            id: run.id.clone(),
            scenario_sha256: run.scenario_sha256.clone(),
            probe: run.scenario.probe.clone(),
            validation_passed: run.validation.as_ref().map(|v| v.passed),
            tf: run.fit.as_ref().map(|f| f.tf),
            fit_flags: run.fit.as_ref().map(|f| f.flags),
            circuit: run.circuit,
            metrics: run.metrics.clone(),
            failure: run.failure.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub scenario: String,
    pub baseline: String,
    pub delta: Option<ModelDelta>,
    /// Why no delta could be formed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub format_version: u32,
    pub runs: Vec<RunSummary>,
    pub comparisons: Vec<Comparison>,
}

/// Compares every run that names a baseline against that baseline's run.
pub fn baseline_comparisons(runs: &[ProbeRun]) -> Vec<Comparison> {
    let by_id: BTreeMap<&str, &ProbeRun> = runs.iter().map(|r| (r.id.as_str(), r)).collect();
    runs.iter()
        .filter_map(|run| {
            let baseline = run.scenario.baseline.as_ref()?;
            let result = match by_id.get(baseline.as_str()) {
                Some(b) => compare_runs(b, run).map_err(|e| e.to_string()),
                None => Err(format!("baseline `{baseline}` is not part of this batch")),
            };
            let (delta, error) = match result {
                Ok(d) => (Some(d), None),
                Err(e) => (None, Some(e)),
            };
            Some(Comparison {
                scenario: run.id.clone(),
                baseline: baseline.clone(),
                delta,
                error,
            })
        })
        .collect()
}

pub fn build_report(runs: &[ProbeRun]) -> ProbeReport {
    ProbeReport {
        format_version: FORMAT_VERSION,
        runs: runs.iter().map(RunSummary::from).collect(),
        comparisons: baseline_comparisons(runs),
    }
}

/// Circuit-table rows; a run is flagged when its baseline comparison is.
pub fn circuit_rows(runs: &[ProbeRun], comparisons: &[Comparison]) -> Vec<CircuitRow> {
    runs.iter()
        .map(|run| CircuitRow {
            scenario: run.id.clone(),
            circuit: run.circuit,
            flagged: comparisons
                .iter()
                .any(|c| c.scenario == run.id && c.delta.as_ref().is_some_and(|d| d.flagged)),
        })
        .collect()
}

#[derive(Serialize)]
struct RunTimings<'a> {
    id: &'a str,
    stages: &'a [StageTiming],
}

/// Writes the report and every per-run artifact into `out_dir`:
///
/// - `report.json`, `circuit_table.csv`, `timings.json`
/// - per run: `<id>_run.json`, `<id>_probe.csv`, `<id>_measured.csv`,
///   `<id>_zp.csv`, `<id>_oracle.csv`, `<id>_qsss.csv` when produced.
pub fn emit_report(runs: &[ProbeRun], out_dir: &Path) -> Result<ProbeReport> {
    fs::create_dir_all(out_dir).map_err(|e| ProbeError::io(out_dir, e))?;
    let report = build_report(runs);
    for run in runs {
        let file = |suffix: &str| out_dir.join(format!("{}_{suffix}", run.id));
        io::write_json(&file("run.json"), &run.record())?;
        if let Some(m) = &run.measurements {
            io::write_waveform(&file("probe.csv"), &m.probe)?;
            io::write_waveform(&file("measured.csv"), &m.current)?;
        }
        if let Some(z) = &run.z_p {
            io::write_waveform(&file("zp.csv"), z)?;
        }
        if let Some(h) = &run.oracle {
            io::write_waveform(&file("oracle.csv"), h)?;
        }
        if let Some(track) = &run.qsss {
            io::write_qsss(&file("qsss.csv"), track)?;
        }
    }
    let table = io::circuit_table_to_csv(&circuit_rows(runs, &report.comparisons));
    let path = out_dir.join("circuit_table.csv");
    fs::write(&path, table).map_err(|e| ProbeError::io(path, e))?;
    let timings: Vec<RunTimings> = runs
        .iter()
        .map(|r| RunTimings {
            id: &r.id,
            stages: &r.timings,
        })
        .collect();
    io::write_json(&out_dir.join("timings.json"), &timings)?;
    io::write_json(&out_dir.join("report.json"), &report)?;
    Ok(report)
}
