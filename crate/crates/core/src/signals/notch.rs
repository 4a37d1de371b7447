//! Second-order IIR notch used to strip the power-frequency component from
//! the measured output before correlation.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result, Waveform};

/// Default quality factor: `f0 / Q` is the -3 dB stop bandwidth.
pub const DEFAULT_QUALITY: f64 = 3.0;

/// Biquad notch with its zeros on the unit circle at `±f0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Notch {
    f0: f64,
    quality: f64,
    dt: f64,
    b: [f64; 3],
    a: [f64; 3],
}

impl Notch {
    pub fn new(f0: f64, quality: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::param("dt", "must be positive"));
        }
        if !(quality > 0.0) {
            return Err(Error::param("quality", "must be positive"));
        }
        let nyquist = 0.5 / dt;
        if !(f0 > 0.0) || f0 >= nyquist {
            return Err(Error::AboveNyquist { f0, nyquist });
        }
        let w0 = 2.0 * PI * f0 * dt;
        let alpha = w0.sin() / (2.0 * quality);
        let cw = w0.cos();
        let a0 = 1.0 + alpha;
        Ok(Notch {
            f0,
            quality,
            dt,
            b: [1.0 / a0, -2.0 * cw / a0, 1.0 / a0],
            a: [1.0, -2.0 * cw / a0, (1.0 - alpha) / a0],
        })
    }

    pub fn center(&self) -> f64 {
        self.f0
    }

    pub fn quality(&self) -> f64 {
        self.quality
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Gain at normalized frequency `omega` (rad/sample).
    pub fn response(&self, omega: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -omega);
        let z2 = z1 * z1;
        let num = self.b[0] + z1 * self.b[1] + z2 * self.b[2];
        let den = self.a[0] + z1 * self.a[1] + z2 * self.a[2];
        num / den
    }

    /// Gain at `freq` hertz.
    pub fn response_hz(&self, freq: f64) -> Complex64 {
        self.response(2.0 * PI * freq * self.dt)
    }

    /// Causal single-pass filtering from a zero initial state.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        let (mut s1, mut s2) = (0.0, 0.0);
        x.iter()
            .map(|&v| {
                let y = b0 * v + s1;
                s1 = b1 * v - a1 * y + s2;
                s2 = b2 * v - a2 * y;
                y
            })
            .collect()
    }

    pub fn filter(&self, x: &Waveform) -> Result<Waveform> {
        if !crate::waveform::same_dt(self.dt, x.dt()) {
            return Err(Error::DtMismatch {
                left: x.dt(),
                right: self.dt,
            });
        }
        Waveform::new(x.dt(), x.t_start(), self.apply(x.samples()), x.unit().clone())
    }
}

/// Notch-filters `x` at `f0` with quality `quality`, at the waveform's own rate.
pub fn notch_filter(x: &Waveform, f0: f64, quality: f64) -> Result<Waveform> {
    Notch::new(f0, quality, x.dt())?.filter(x)
}
