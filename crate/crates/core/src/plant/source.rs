use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Unit, Waveform};

/// A scalar function of time used for source magnitude and angle schedules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// Linear from `from` at `start` to `to` at `end`, flat outside.
    Ramp {
        start: f64,
        end: f64,
        from: f64,
        to: f64,
    },
    /// `before` until `at`, `after` from then on.
    Step {
        at: f64,
        before: f64,
        after: f64,
    },
    /// Piecewise linear through `[t, value]` points, flat beyond the ends.
    Piecewise {
        points: Vec<[f64; 2]>,
    },
}

impl Profile {
    pub const fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    pub fn check(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Profile::Constant { value } if finite(&[*value]) => Ok(()),
            Profile::Ramp { start, end, from, to } if finite(&[*start, *end, *from, *to]) => {
                if end > start {
                    Ok(())
                } else {
                    Err(Error::param("ramp", "end must come after start"))
                }
            }
            Profile::Step { at, before, after } if finite(&[*at, *before, *after]) => Ok(()),
            Profile::Piecewise { points } => {
                if points.is_empty() {
                    return Err(Error::param("points", "piecewise profile needs at least one point"));
                }
                if !points.iter().all(|p| finite(p)) {
                    return Err(Error::param("points", "must be finite"));
                }
                if points.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(Error::param("points", "times must be strictly increasing"));
                }
                Ok(())
            }
            _ => Err(Error::param("profile", "values must be finite")),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Ramp { start, end, from, to } => {
                let x = ((t - start) / (end - start)).clamp(0.0, 1.0);
                from + (to - from) * x
            }
            Profile::Step { at, before, after } => {
                if t < *at {
                    *before
                } else {
                    *after
                }
            }
            Profile::Piecewise { points } => {
                let first = points[0];
                let last = points[points.len() - 1];
                if t <= first[0] {
                    return first[1];
                }
                if t >= last[0] {
                    return last[1];
                }
                let k = points.partition_point(|p| p[0] <= t);
                let (p0, p1) = (points[k - 1], points[k]);
                p0[1] + (p1[1] - p0[1]) * (t - p0[0]) / (p1[0] - p0[0])
            }
        }
    }
}

/// Magnitude (amperes peak) and angle (radians) of `i_s(t) = I_s(t) sin(ωt + β(t))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSchedule {
    pub magnitude: Profile,
    #[serde(default = "zero_angle")]
    pub angle: Profile,
}

fn zero_angle() -> Profile {
    Profile::constant(0.0)
}

impl SourceSchedule {
    pub fn constant(magnitude: f64, angle: f64) -> Self {
        SourceSchedule {
            magnitude: Profile::constant(magnitude),
            angle: Profile::constant(angle),
        }
    }

    pub fn check(&self) -> Result<()> {
        self.magnitude.check()?;
        self.angle.check()
    }

    pub fn eval(&self, f: f64, t: f64) -> f64 {
        self.magnitude.eval(t) * (2.0 * PI * f * t + self.angle.eval(t)).sin()
    }
}

/// First time at which the magnitude changes faster than `0.1 f I_s`,
/// scanned on the sample grid; `None` when the schedule is quasi-steady.
pub fn rate_bound_violation(schedule: &SourceSchedule, f: f64, dt: f64, t_start: f64, samples: usize) -> Option<f64> {
    let mut prev = schedule.magnitude.eval(t_start);
    for k in 1..samples {
        let t = t_start + k as f64 * dt;
        let cur = schedule.magnitude.eval(t);
        let rate = (cur - prev).abs() / dt;
        let level = prev.abs().max(cur.abs());
        if rate > 0.0 && rate >= 0.1 * f * level {
            return Some(t);
        }
        prev = cur;
    }
    None
}

/// Samples `i_s(t) = I_s(t) sin(2πf t + β(t))` at `t_start + k dt` over
/// `horizon` seconds. Schedules that move faster than the quasi-steady bound
/// are sampled anyway, with a warning.
pub fn qsss_source_waveform(
    schedule: &SourceSchedule,
    f: f64,
    dt: f64,
    t_start: f64,
    horizon: f64,
) -> Result<Waveform> {
    schedule.check()?;
    if !(f > 0.0) || !f.is_finite() {
        return Err(Error::param("f", "must be positive"));
    }
    if !(dt > 0.0) || !(horizon > 0.0) {
        return Err(Error::param("horizon", "dt and horizon must be positive"));
    }
    let n = ((horizon / dt).round() as usize).max(1);
    if let Some(t) = rate_bound_violation(schedule, f, dt, t_start, n) {
        log::warn!("source magnitude changes faster than 0.1*f*I_s at t = {t:.6} s; phasor tracking assumes quasi-steady operation");
    }
    let samples = (0..n).map(|k| schedule.eval(f, t_start + k as f64 * dt)).collect();
    Waveform::new(dt, t_start, samples, Unit::Ampere)
}
