//! Pulse-compression probing of linear networks.
//!
//! A pseudo-random binary pulse train is injected alongside a plant's
//! operating input; cross-correlating the measured output with a scaled copy
//! of the probe compresses it into an impulse and exposes the plant's impulse
//! response. From there the crate realizes a state-space model from the
//! Hankel matrix of Markov parameters, reduces it to a second-order
//! admittance, maps that onto an equivalent circuit, and tracks a
//! quasi-steady-state sinusoidal source hidden behind the network.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, scenario
//! orchestration and the command-line front end live in `pcp-probe`.
//!
//! Modules follow the processing chain:
//!
//! * [`signals`]: maximal-length sequences, probe synthesis, correlation, notch filtering.
//! * [`plant`]: state-space plants, exact ZOH simulation, the direct impulse-response oracle.
//! * [`ident`]: Hankel matrices, order selection, balanced realization, d2c, second-order fit.
//! * [`circuit`]: second-order transfer function <-> equivalent circuit, change detection.
//! * [`qsss`]: least-squares phasors and source back-solution.

#![no_std]
// Range checks are written `!(x > 0.0)` so NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod circuit;
mod error;
pub mod ident;
pub mod linalg;
pub mod plant;
pub mod qsss;
pub mod signals;
mod waveform;

pub use error::{Error, Result};
pub use waveform::{nrmse, Unit, Waveform};
