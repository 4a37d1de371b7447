//! Pulse-compression probing runs: scenario files in, identified circuits,
//! waveforms and reports out.

pub mod cases;
mod error;
pub mod io;
pub mod pipeline;
pub mod report;

pub use error::{ProbeError, Result};
pub use pipeline::{compare_runs, run_batch, run_oracle, run_probe, ProbeRun, RunRecord, Stage};
pub use report::{emit_report, ProbeReport};
