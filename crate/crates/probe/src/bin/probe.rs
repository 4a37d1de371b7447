use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use pcp_core::circuit::ChangeThresholds;
use pcp_core::plant::ScenarioConfig;
use pcp_probe::pipeline::{compare_records, describe_delta, validate_scenario, RunRecord};
use pcp_probe::{emit_report, io, run_batch, run_oracle, ProbeError};

const VALIDATION_FAILURE: u8 = 2;
const STAGE_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "probe",
    version,
    about = "Identify feeder equivalent circuits by pulse-compression probing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full probing pipeline and write a report.
    Run {
        /// Scenario JSON: one scenario or an array of them.
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Noise seed for every scenario.
        #[arg(long)]
        seed: Option<u64>,
        /// Injected probe periods.
        #[arg(long)]
        periods: Option<usize>,
        /// Skip the notch filter.
        #[arg(long)]
        no_notch: bool,
        /// Realize exactly this many states.
        #[arg(long)]
        force_order: Option<usize>,
    },
    /// Write the direct impulse response of each scenario plant.
    Oracle {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Compare two stored runs and print the parameter changes as JSON.
    Compare {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
        /// Relative change that flags a parameter.
        #[arg(long, default_value_t = 0.10)]
        threshold: f64,
    },
    /// Check probe designs and plant stability.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PROBE_LOG", "warn")).init();
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<ProbeError>() {
                Some(ProbeError::Validation(_) | ProbeError::Scenario(_)) => ExitCode::from(VALIDATION_FAILURE),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn load(path: &Path) -> anyhow::Result<Vec<ScenarioConfig>> {
    let scenarios = io::read_scenarios(path)?;
    anyhow::ensure!(!scenarios.is_empty(), "{} holds no scenarios", path.display());
    Ok(scenarios)
}

fn dispatch(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Run {
            scenario,
            out,
            seed,
            periods,
            no_notch,
            force_order,
        } => {
            let mut scenarios = load(&scenario)?;
            for s in &mut scenarios {
                if let Some(seed) = seed {
                    s.noise.rng_seed = seed;
                }
                if let Some(p) = periods {
                    s.probe.periods = p;
                }
                if no_notch {
                    s.analysis.notch = false;
                }
                if force_order.is_some() {
                    s.analysis.force_order = force_order;
                }
            }
            let mut runs = Vec::new();
            let mut code = ExitCode::SUCCESS;
            for result in run_batch(&scenarios) {
                match result {
                    Ok(run) => runs.push(run),
                    Err(ProbeError::Stage { stage, source, partial }) => {
                        eprintln!("{}: stage {stage} failed: {source}", partial.id);
                        code = ExitCode::from(STAGE_FAILURE);
                        runs.push(*partial);
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            let report = emit_report(&runs, &out)?;
            for run in &report.runs {
                match (&run.circuit, &run.failure) {
                    (Some(p), _) => println!(
                        "{}: L = {:.4} mH, R1 = {:.4} Ω, R2 = {:.4} Ω, C = {:.4} µF",
                        run.id,
                        p.l * 1e3,
                        p.r1,
                        p.r2,
                        p.c * 1e6
                    ),
                    (None, Some(f)) => println!("{}: failed at {}", run.id, f.stage),
                    (None, None) => println!("{}: no circuit", run.id),
                }
            }
            for c in &report.comparisons {
                match &c.delta {
                    Some(d) => println!(
                        "{} vs {}: {}{}",
                        c.scenario,
                        c.baseline,
                        describe_delta(d),
                        if d.flagged { " (flagged)" } else { "" }
                    ),
                    None => println!("{} vs {}: {}", c.scenario, c.baseline, c.error.as_deref().unwrap_or("")),
                }
            }
            println!("report written to {}", out.display());
            Ok(code)
        }
        Command::Oracle { scenario, out } => {
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for s in load(&scenario)? {
                let h = run_oracle(&s)?;
                let path = out.join(format!("{}_oracle.csv", s.id));
                io::write_waveform(&path, &h)?;
                println!("{}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare {
            baseline,
            candidate,
            threshold,
        } => {
            let a: RunRecord = io::read_json(&baseline)?;
            let b: RunRecord = io::read_json(&candidate)?;
            let delta = compare_records(&a, &b, &ChangeThresholds::uniform(threshold))?;
            println!("{}", serde_json::to_string_pretty(&delta)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { scenario } => {
            let mut code = ExitCode::SUCCESS;
            for s in load(&scenario)? {
                match validate_scenario(&s) {
                    Ok((plant, report)) => {
                        let eig = plant.eigenvalues();
                        let slowest = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
                        println!("{}: ok, {} states, slowest pole {slowest:.3} 1/s", s.id, plant.order());
                        if !report.passed {
                            println!("{}: violations acknowledged ({:?})", s.id, report.binding);
                        }
                    }
                    Err(ProbeError::Validation(report)) => {
                        println!("{}: probe design fails", s.id);
                        for c in report.checks.iter().filter(|c| !c.passed) {
                            println!("  {}: {} against limit {}", c.name, c.actual, c.limit);
                        }
                        code = ExitCode::from(VALIDATION_FAILURE);
                    }
                    Err(e) => {
                        println!("{}: {e}", s.id);
                        code = ExitCode::from(VALIDATION_FAILURE);
                    }
                }
            }
            Ok(code)
        }
    }
}
