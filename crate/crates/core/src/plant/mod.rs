//! Linear plants seen from the feeder terminal, their exact zero-order-hold
//! simulation, and the direct impulse-response oracle.
//!
//! Every plant has two inputs, the terminal voltage `V` and a source current
//! `I_s` injected at an internal node, and one output, the terminal current.

mod build;
mod scenario;
mod sim;
mod source;

pub use build::{build_ladder_plant, build_plant_from_circuit, LadderSection, PlantModel};
pub use scenario::{AnalysisConfig, OperatingVoltage, PlantSpec, ScenarioConfig};
pub use sim::{direct_impulse_response, simulate, NoiseConfig};
pub use source::{qsss_source_waveform, rate_bound_violation, Profile, SourceSchedule};
