use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::PlantModel;
use crate::ident::Domain;
use crate::linalg::Matrix;
use crate::waveform::same_dt;
use crate::{Error, Result, Unit, Waveform};

/// Additive white Gaussian noise on the measured current.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Standard deviation in amperes.
    #[serde(default)]
    pub measurement_sigma: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

impl NoiseConfig {
    pub const fn none() -> Self {
        NoiseConfig {
            measurement_sigma: 0.0,
            rng_seed: 0,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.measurement_sigma >= 0.0) || !self.measurement_sigma.is_finite() {
            return Err(Error::param("measurement_sigma", "must be finite and non-negative"));
        }
        Ok(())
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig::none()
    }
}

/// Row-major copy of a small dense matrix for the inner simulation loop.
struct Dense {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Dense {
    fn from(m: &Matrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        Dense {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Iterates a discrete plant over `len` steps and keeps output 0 at every
/// `keep_every`-th step, starting with step 0. `inputs[j][k]` is input `j`
/// at step `k`.
fn run_discrete(plant: &PlantModel, inputs: &[&[f64]], len: usize, keep_every: usize) -> Vec<f64> {
    let a = Dense::from(plant.a());
    let b = Dense::from(plant.b());
    let c = Dense::from(plant.c());
    let d = Dense::from(plant.d());
    let n = a.rows;
    let m = b.cols;
    let mut x = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut u = vec![0.0; m];
    let mut out = Vec::with_capacity(len.div_ceil(keep_every));
    for k in 0..len {
        for (j, input) in inputs.iter().enumerate() {
            u[j] = input[k];
        }
        if k % keep_every == 0 {
            out.push(dot(c.row(0), &x) + dot(d.row(0), &u));
        }
        for (i, slot) in next.iter_mut().enumerate() {
            *slot = dot(a.row(i), &x) + dot(b.row(i), &u);
        }
        core::mem::swap(&mut x, &mut next);
    }
    out
}

/// Simulates `plant` under zero-order-held `inputs` sampled at `dt_sim`,
/// adds measurement noise and returns the terminal current at every
/// `decimation`-th step.
///
/// One waveform per plant input, all of equal length. A continuous plant is
/// discretized exactly at `dt_sim`; a discrete plant must already run at
/// that step.
pub fn simulate(
    plant: &PlantModel,
    inputs: &[Waveform],
    noise: &NoiseConfig,
    dt_sim: f64,
    decimation: usize,
) -> Result<Waveform> {
    noise.check()?;
    if decimation == 0 {
        return Err(Error::param("decimation", "must be at least 1"));
    }
    if plant.outputs() != 1 {
        return Err(Error::Dimension(alloc::format!(
            "simulation needs a single-output plant, got {} outputs",
            plant.outputs()
        )));
    }
    if inputs.len() != plant.inputs() {
        return Err(Error::Dimension(alloc::format!(
            "plant has {} inputs, {} waveforms given",
            plant.inputs(),
            inputs.len()
        )));
    }
    let len = inputs[0].len();
    for w in inputs {
        if !same_dt(w.dt(), dt_sim) {
            return Err(Error::DtMismatch {
                left: w.dt(),
                right: dt_sim,
            });
        }
        if w.len() != len {
            return Err(Error::LengthMismatch {
                left: len,
                right: w.len(),
            });
        }
    }
    let discrete = match plant.domain() {
        Domain::Continuous => plant.discretize(dt_sim)?,
        Domain::Discrete { dt } if same_dt(dt, dt_sim) => plant.clone(),
        Domain::Discrete { dt } => {
            return Err(Error::DtMismatch {
                left: dt,
                right: dt_sim,
            })
        }
    };
    let columns: Vec<&[f64]> = inputs.iter().map(Waveform::samples).collect();
    let mut y = run_discrete(&discrete, &columns, len, decimation);
    if noise.measurement_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.rng_seed);
        let normal = Normal::new(0.0, noise.measurement_sigma)
            .map_err(|e| Error::param("measurement_sigma", alloc::format!("{e}")))?;
        for v in &mut y {
            *v += normal.sample(&mut rng);
        }
    }
    Waveform::new(dt_sim * decimation as f64, inputs[0].t_start(), y, Unit::Ampere)
}

/// Markov parameters of the plant discretized at `t0`: the terminal current
/// after a voltage input of 1 held for one step, `length` samples long.
pub fn direct_impulse_response(plant: &PlantModel, t0: f64, length: usize) -> Result<Waveform> {
    plant.check_stable()?;
    if length == 0 {
        return Err(Error::param("length", "must be at least 1"));
    }
    let discrete = plant.discretize(t0)?;
    let mut impulse = vec![0.0; length];
    impulse[0] = 1.0;
    let zeros = vec![0.0; length];
    let mut columns: Vec<&[f64]> = vec![&impulse];
    for _ in 1..plant.inputs() {
        columns.push(&zeros);
    }
    let h = run_discrete(&discrete, &columns, length, 1);
    Waveform::new(t0, 0.0, h, Unit::AmperePerVolt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{circuit_to_tf, CircuitParams};
    use crate::plant::{build_ladder_plant, build_plant_from_circuit, LadderSection};
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    fn normal() -> CircuitParams {
        CircuitParams::from_table_units(14.72, -1.402, 24.58, 34.52)
    }

    fn wave(dt: f64, samples: Vec<f64>) -> Waveform {
        Waveform::new(dt, 0.0, samples, Unit::Volt).unwrap()
    }

    #[test]
    fn zero_input_zero_output() {
        let plant = build_plant_from_circuit(&normal()).unwrap();
        let z = wave(1e-5, vec![0.0; 100]);
        let y = simulate(&plant, &[z.clone(), z], &NoiseConfig::none(), 1e-5, 1).unwrap();
        assert!(y.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn step_reaches_final_value() {
        let plant = build_plant_from_circuit(&normal()).unwrap();
        let tf = circuit_to_tf(&normal()).unwrap();
        let n = 40_000;
        let v = wave(1e-5, vec![100.0; n]);
        let y = simulate(&plant, &[v, wave(1e-5, vec![0.0; n])], &NoiseConfig::none(), 1e-5, 1).unwrap();
        assert_relative_eq!(*y.samples().last().unwrap(), 100.0 * tf.b / tf.d, max_relative = 1e-6);
    }

    #[test]
    fn sinusoid_amplitude_follows_frequency_response() {
        let plant = build_plant_from_circuit(&normal()).unwrap();
        let dt = 1e-5;
        let n = 60_000;
        let w = 2.0 * PI * 60.0;
        let v: Vec<f64> = (0..n).map(|k| 3387.0 * (w * (k as f64 + 0.5) * dt).sin()).collect();
        let y = simulate(
            &plant,
            &[wave(dt, v), wave(dt, vec![0.0; n])],
            &NoiseConfig::none(),
            dt,
            1,
        )
        .unwrap();
        let last_cycle = &y.samples()[n - 1667..];
        let peak = last_cycle.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let gain = circuit_to_tf(&normal()).unwrap().response(w).norm();
        assert_relative_eq!(peak, gain * 3387.0, max_relative = 1e-3);
    }

    #[test]
    fn first_order_oracle_is_geometric() {
        let (r, l, t0) = (2.0, 5e-3, 1e-4);
        let plant = build_ladder_plant(&[LadderSection::series(r, l)]).unwrap();
        let h = direct_impulse_response(&plant, t0, 50).unwrap();
        assert_eq!(h.samples()[0], 0.0);
        let ratio = (-r * t0 / l).exp();
        assert_relative_eq!(h.samples()[1], (1.0 - ratio) / r, max_relative = 1e-12);
        for k in 2..50 {
            assert_relative_eq!(h.samples()[k] / h.samples()[k - 1], ratio, max_relative = 1e-10);
        }
    }

    #[test]
    fn static_gain_oracle() {
        let plant = PlantModel::new(
            Matrix::zeros(0, 0),
            Matrix::zeros(0, 1),
            Matrix::zeros(1, 0),
            Matrix::from_element(1, 1, 0.25),
            Domain::Continuous,
        )
        .unwrap();
        let h = direct_impulse_response(&plant, 1e-3, 10).unwrap();
        assert_eq!(h.samples()[0], 0.25);
        assert!(h.samples()[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn normal_oracle_oscillates_at_damped_frequency() {
        let plant = build_plant_from_circuit(&normal()).unwrap();
        let tf = circuit_to_tf(&normal()).unwrap();
        let t0 = 1e-5;
        let h = direct_impulse_response(&plant, t0, 5000).unwrap();
        let s = h.samples();
        // Average spacing of sign changes is half a damped period.
        let crossings: Vec<usize> = (2..s.len())
            .filter(|&k| s[k - 1].signum() != s[k].signum() && s[k] != 0.0)
            .collect();
        let half = (crossings[crossings.len() - 1] - crossings[0]) as f64 * t0 / (crossings.len() - 1) as f64;
        let expect = (tf.d - tf.c * tf.c / 4.0).sqrt() / (2.0 * PI);
        assert_relative_eq!(1.0 / (2.0 * half), expect, max_relative = 5e-3);
    }

    #[test]
    fn impulse_simulation_equals_oracle_bitwise() {
        let s = LadderSection::with_shunt(0.5, 1e-3, 20e-6, Some(80.0));
        let plant = build_ladder_plant(&[s, s]).unwrap();
        let dt = 1e-4;
        let mut u = vec![0.0; 300];
        u[0] = 1.0;
        let y = simulate(
            &plant,
            &[wave(dt, u), wave(dt, vec![0.0; 300])],
            &NoiseConfig::none(),
            dt,
            1,
        )
        .unwrap();
        let h = direct_impulse_response(&plant, dt, 300).unwrap();
        assert_eq!(y.samples(), h.samples());
    }

    #[test]
    fn decimation_matches_direct_coarse_run() {
        let plant = build_plant_from_circuit(&normal()).unwrap();
        let q = 10;
        let t0 = 1e-4;
        let chips: Vec<f64> = (0..400)
            .map(|k| if (k * 7919) % 13 < 6 { 50.0 } else { -50.0 })
            .collect();
        let fine: Vec<f64> = chips.iter().flat_map(|&c| core::iter::repeat_n(c, q)).collect();
        let zf = vec![0.0; fine.len()];
        let y_fine = simulate(
            &plant,
            &[wave(t0 / q as f64, fine), wave(t0 / q as f64, zf)],
            &NoiseConfig::none(),
            t0 / q as f64,
            q,
        )
        .unwrap();
        let zc = vec![0.0; chips.len()];
        let y_coarse = simulate(&plant, &[wave(t0, chips), wave(t0, zc)], &NoiseConfig::none(), t0, 1).unwrap();
        let scale = y_coarse.peak();
        for (a, b) in y_fine.samples().iter().zip(y_coarse.samples()) {
            assert!((a - b).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn noise_is_reproducible() {
        let plant = build_plant_from_circuit(&normal()).unwrap();
        let z = wave(1e-4, vec![0.0; 1000]);
        let noise = NoiseConfig {
            measurement_sigma: 0.3,
            rng_seed: 11,
        };
        let a = simulate(&plant, &[z.clone(), z.clone()], &noise, 1e-4, 1).unwrap();
        let b = simulate(&plant, &[z.clone(), z.clone()], &noise, 1e-4, 1).unwrap();
        assert_eq!(a, b);
        assert_relative_eq!(a.rms(), 0.3, max_relative = 0.1);
        let c = simulate(&plant, &[z.clone(), z], &NoiseConfig { rng_seed: 12, ..noise }, 1e-4, 1).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn input_checks() {
        let plant = build_plant_from_circuit(&normal()).unwrap();
        let z = wave(1e-4, vec![0.0; 10]);
        assert!(matches!(
            simulate(&plant, &[z.clone(), z.clone()], &NoiseConfig::none(), 1e-5, 1),
            Err(Error::DtMismatch { .. })
        ));
        assert!(simulate(&plant, core::slice::from_ref(&z), &NoiseConfig::none(), 1e-4, 1).is_err());
        let short = wave(1e-4, vec![0.0; 5]);
        assert!(simulate(&plant, &[z, short], &NoiseConfig::none(), 1e-4, 1).is_err());
    }
}
