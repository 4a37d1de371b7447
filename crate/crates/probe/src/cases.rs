//! Built-in scenarios: the equivalent circuits of the measured feeder cases
//! and the plant edits used to exercise change detection.

use pcp_core::circuit::CircuitParams;
use pcp_core::plant::{LadderSection, OperatingVoltage, PlantSpec, ScenarioConfig, SourceSchedule};
use pcp_core::signals::ProbeConfig;

/// Phase-to-ground operating voltage, volts peak.
pub const OPERATING_VOLTAGE: f64 = 3387.0;
/// Probe amplitude, volts.
pub const PROBE_AMPLITUDE: f64 = 50.0;
pub const PROBE_ORDER: u32 = 10;
/// Chip duration, seconds.
pub const BIT_DURATION: f64 = 100e-6;

/// Identified feeder circuits: name, then L (mH), R1 (Ω), R2 (Ω), C (µF).
pub const FEEDER_CASES: [(&str, [f64; 4]); 5] = [
    ("normal", [14.72, -1.402, 24.58, 34.52]),
    ("high_z_source", [14.72, -1.402, 24.58, 34.52]),
    ("zero_z_source", [16.05, -1.685, 26.15, 30.61]),
    ("outage", [31.17, -59.56, 11380.0, 0.04509]),
    ("load_increase", [15.28, -1.575, 24.7, 32.37]),
];

pub fn feeder_circuit(name: &str) -> Option<CircuitParams> {
    FEEDER_CASES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, [l, r1, r2, c])| CircuitParams::from_table_units(*l, *r1, *r2, *c))
}

pub fn default_probe() -> ProbeConfig {
    ProbeConfig::new(PROBE_ORDER, BIT_DURATION, PROBE_AMPLITUDE)
}

/// Probe only: no operating voltage, no noise.
pub fn clean(id: &str, params: CircuitParams) -> ScenarioConfig {
    ScenarioConfig::new(id, PlantSpec::Circuit(params), default_probe())
}

/// Probe on top of the operating voltage, notch enabled.
pub fn online(id: &str, params: CircuitParams) -> ScenarioConfig {
    let mut s = clean(id, params);
    s.operating_voltage = OperatingVoltage {
        amplitude: OPERATING_VOLTAGE,
        phase: 0.0,
    };
    s
}

/// Three-section ladder with a grounded far end.
pub fn ladder_sections() -> Vec<LadderSection> {
    vec![
        LadderSection::with_shunt(0.4, 4e-3, 30e-6, Some(60.0)),
        LadderSection::with_shunt(0.8, 2e-3, 10e-6, Some(200.0)),
        LadderSection::series(5.0, 6e-3),
    ]
}

/// Every scenario shipped with the tool.
pub fn all() -> Vec<ScenarioConfig> {
    let normal = feeder_circuit("normal").unwrap();
    let mut out = Vec::new();
    for (name, _) in FEEDER_CASES {
        let p = feeder_circuit(name).unwrap();
        let mut c = clean(&format!("{name}_clean"), p);
        let mut o = online(&format!("{name}_online"), p);
        if name != "normal" {
            c.baseline = Some("normal_clean".into());
            o.baseline = Some("normal_online".into());
        }
        out.push(c);
        out.push(o);
    }

    // A stiff 60 Hz source in parallel: a current injection the probe should not see.
    let mut high_z = online("parallel_source", normal);
    high_z.description = "normal feeder with a 60 Hz current source in parallel".into();
    high_z.source = Some(SourceSchedule::constant(20.0, 0.8));
    high_z.baseline = Some("normal_online".into());
    out.push(high_z);

    let mut doubled = online(
        "doubled_l",
        CircuitParams {
            l: 2.0 * normal.l,
            ..normal
        },
    );
    doubled.description = "normal feeder with its series inductance doubled".into();
    doubled.baseline = Some("normal_online".into());
    out.push(doubled);

    let mut embedded = online("embedded_source", normal);
    embedded.description = "normal feeder hiding a 10 A source at 0.5 rad".into();
    embedded.source = Some(SourceSchedule::constant(10.0, 0.5));
    out.push(embedded);

    let mut ladder = ScenarioConfig::new(
        "ladder",
        PlantSpec::Ladder {
            sections: ladder_sections(),
        },
        ProbeConfig {
            amplitude: 20.0,
            ..default_probe()
        },
    );
    ladder.description = "three-section ladder probed at the sending end".into();
    out.push(ladder);
    out
}
