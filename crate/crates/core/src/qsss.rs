//! Quasi-steady-state sinusoidal phasors.
//!
//! A signal `M sin(ωt + φ)` is written as `A sin ωt + B cos ωt`; a window of
//! samples gives `(A, B)` by linear least squares, with the regressor built
//! on absolute time so that estimates from different windows share one
//! angle reference. The phasor is `A + jB`, i.e. magnitude `M` at angle `φ`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::CircuitParams;
use crate::linalg;
use crate::{Error, Result, Waveform};

/// Largest regressor condition number accepted by [`estimate_phasor`].
pub const MAX_CONDITION: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phasor {
    /// Peak magnitude in signal units.
    pub magnitude: f64,
    /// Radians in `(-π, π]`.
    pub angle: f64,
    /// Seconds; the centre of the estimation window.
    pub at_time: f64,
    /// Hertz.
    pub frequency: f64,
}

impl Phasor {
    pub fn from_complex(z: Complex64, at_time: f64, frequency: f64) -> Self {
        let angle = if z.norm() == 0.0 { 0.0 } else { wrap_angle(z.arg()) };
        Phasor {
            magnitude: z.norm(),
            angle,
            at_time,
            frequency,
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.angle)
    }

    /// Instantaneous value `M sin(2πf t + φ)`.
    pub fn eval(&self, t: f64) -> f64 {
        self.magnitude * (2.0 * PI * self.frequency * t + self.angle).sin()
    }
}

/// Maps an angle onto `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut x = theta % (2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    } else if x <= -PI {
        x += 2.0 * PI;
    }
    x
}

/// Least-squares phasor of `x` at frequency `f` over `window_samples`
/// samples starting at the sample nearest `window_start`.
pub fn estimate_phasor(x: &Waveform, f: f64, window_start: f64, window_samples: usize) -> Result<Phasor> {
    if !(f > 0.0) || !f.is_finite() {
        return Err(Error::param("f", "must be positive"));
    }
    let offset = (window_start - x.t_start()) / x.dt();
    let k0 = offset.round();
    if k0 < 0.0 || (offset - k0).abs() > 1e-6 {
        return Err(Error::param("window_start", "must fall on a sample of the waveform"));
    }
    let k0 = k0 as usize;
    if window_samples < 2 {
        return Err(Error::param("window_samples", "need at least two samples"));
    }
    if k0 + window_samples > x.len() {
        return Err(Error::param(
            "window_samples",
            "window runs past the end of the waveform",
        ));
    }
    let span = (window_samples - 1) as f64 * x.dt();
    if span * f < 0.25 - 1e-12 {
        return Err(Error::IllConditioned { cond: f64::INFINITY });
    }
    let w = 2.0 * PI * f;
    let reg = DMatrix::from_fn(window_samples, 2, |k, j| {
        let phase = w * x.time(k0 + k);
        if j == 0 {
            phase.sin()
        } else {
            phase.cos()
        }
    });
    let rhs = DVector::from_column_slice(&x.samples()[k0..k0 + window_samples]);
    let svd = linalg::svd(&reg)?;
    let s_max = svd.singular_values[0];
    let s_min = svd.singular_values[1];
    let cond = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    if !(cond < MAX_CONDITION) {
        return Err(Error::IllConditioned { cond });
    }
    // Pseudo-inverse solve: coef = V Σ⁻¹ Uᵀ x.
    let projected = svd.u.transpose() * rhs;
    let coef = [0, 1].map(|r| {
        (0..2)
            .map(|j| svd.v[(r, j)] * projected[j] / svd.singular_values[j])
            .sum::<f64>()
    });
    let centre = x.time(k0) + 0.5 * span;
    Ok(Phasor::from_complex(Complex64::new(coef[0], coef[1]), centre, f))
}

fn check_pair(v: &Phasor, i: &Phasor, params: &CircuitParams) -> Result<()> {
    if (v.frequency - i.frequency).abs() > 1e-12 * v.frequency.abs() {
        return Err(Error::param(
            "frequency",
            "voltage and current phasors must share a frequency",
        ));
    }
    if params.r2 == 0.0 {
        return Err(Error::param("R2", "must be nonzero"));
    }
    Ok(())
}

/// Source current behind the circuit, by nodal analysis at the shunt node:
/// `I_s = Y2 V - (Z1 Y2 + 1) I` with `Y2 = (1 + jωR2C)/R2`, `Z1 = R1 + jωL`.
pub fn source_phasor(v: &Phasor, i: &Phasor, params: &CircuitParams) -> Result<Phasor> {
    check_pair(v, i, params)?;
    let w = 2.0 * PI * v.frequency;
    let y2 = Complex64::new(1.0, w * params.r2 * params.c) / params.r2;
    let z1 = Complex64::new(params.r1, w * params.l);
    let is = y2 * v.to_complex() - (z1 * y2 + 1.0) * i.to_complex();
    Ok(Phasor::from_complex(is, v.at_time, v.frequency))
}

/// The same back-solution with the reactive terms taken as real, `ωL` and
/// `ωR2C` in place of `jωL` and `jωR2C`. Kept for comparison only; it does
/// not satisfy the circuit equations.
pub fn source_phasor_literal(v: &Phasor, i: &Phasor, params: &CircuitParams) -> Result<Phasor> {
    check_pair(v, i, params)?;
    let w = 2.0 * PI * v.frequency;
    let y2 = (w * params.r2 * params.c + 1.0) / params.r2;
    let z1 = params.r1 + w * params.l;
    let is = v.to_complex() * y2 - i.to_complex() * (z1 * y2 + 1.0);
    Ok(Phasor::from_complex(is, v.at_time, v.frequency))
}

/// One window of a [`QsssTrack`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QsssPoint {
    pub t: f64,
    pub voltage: Phasor,
    pub current: Phasor,
    pub source: Phasor,
    /// Active power `V I cos(θ - α) / 2`, watts.
    pub active_power: f64,
    /// Reactive power `V I sin(θ - α) / 2`, vars.
    pub reactive_power: f64,
}

impl QsssPoint {
    /// Apparent power `V I / 2`.
    pub fn apparent_power(&self) -> f64 {
        0.5 * self.voltage.magnitude * self.current.magnitude
    }

    /// Voltage angle minus current angle, wrapped.
    pub fn angle_difference(&self) -> f64 {
        wrap_angle(self.voltage.angle - self.current.angle)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QsssTrack {
    pub frequency: f64,
    /// Window length, seconds.
    pub window: f64,
    /// Window stride, seconds.
    pub stride: f64,
    pub points: Vec<QsssPoint>,
}

impl QsssTrack {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Slides a `window`-second estimator over `v` and `i` in steps of `stride`
/// seconds, reporting terminal and source phasors for every window.
pub fn track_qsss(
    v: &Waveform,
    i: &Waveform,
    params: &CircuitParams,
    f: f64,
    window: f64,
    stride: f64,
) -> Result<QsssTrack> {
    v.check_compatible(i)?;
    if (v.t_start() - i.t_start()).abs() > 1e-9 * v.dt() {
        return Err(Error::param("t_start", "voltage and current must share a time axis"));
    }
    if !(window > 0.0) || !(stride > 0.0) {
        return Err(Error::param("window", "window and stride must be positive"));
    }
    let n = ((window / v.dt()).round() as usize).max(2);
    let step = ((stride / v.dt()).round() as usize).max(1);
    if n > v.len() {
        return Err(Error::param("window", "longer than the waveforms"));
    }
    let mut points = Vec::with_capacity((v.len() - n) / step + 1);
    let mut k0 = 0;
    while k0 + n <= v.len() {
        let start = v.time(k0);
        let vp = estimate_phasor(v, f, start, n)?;
        let ip = estimate_phasor(i, f, start, n)?;
        let sp = source_phasor(&vp, &ip, params)?;
        let s = vp.to_complex() * ip.to_complex().conj() * 0.5;
        points.push(QsssPoint {
            t: vp.at_time,
            voltage: vp,
            current: ip,
            source: sp,
            active_power: s.re,
            reactive_power: s.im,
        });
        k0 += step;
    }
    Ok(QsssTrack {
        frequency: f,
        window: n as f64 * v.dt(),
        stride: step as f64 * v.dt(),
        points,
    })
}
