//! Probe signals: sequence generation, pulse-train synthesis, correlation,
//! notch filtering and signal-to-noise accounting.

mod mls;
mod notch;
mod probe;
mod xcorr;

pub use mls::{default_taps, generate_mls, ChipSequence, MAX_ORDER, MIN_ORDER};
pub use notch::{notch_filter, Notch, DEFAULT_QUALITY};
pub use probe::{
    reference_signal, synthesize_prbpt, validate_config, ConstraintCheck, ProbeConfig, ValidationReport,
    BIT_DURATION_RULE, MEMORY_RULE, ORDER_RULE,
};
pub use xcorr::{circular_xcorr, deembed_filter, mls_unbias};

use crate::{Error, Result, Waveform};

/// Output signal-to-noise ratio `20 log10(rms(y_s) / rms(y_p))` in decibels.
pub fn snr_db(y_s: &Waveform, y_p: &Waveform) -> Result<f64> {
    y_s.check_compatible(y_p)?;
    let noise = y_p.rms();
    if noise == 0.0 {
        return Err(Error::InfiniteSnr);
    }
    Ok(20.0 * (y_s.rms() / noise).log10())
}
