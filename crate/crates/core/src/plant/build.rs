use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::CircuitParams;
use crate::ident::Domain;
use crate::linalg::{self, Matrix};
use crate::{Error, Result};

/// State-space plant `x' = A x + B u`, `y = C x + D u`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    d: Matrix,
    domain: Domain,
    input_labels: Vec<String>,
    output_labels: Vec<String>,
}

impl PlantModel {
    /// Terminal-voltage and source-current inputs, terminal-current output.
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix, domain: Domain) -> Result<Self> {
        let inputs = b.ncols();
        let labels = match inputs {
            1 => vec!["V".to_string()],
            2 => vec!["V".to_string(), "I_s".to_string()],
            _ => (0..inputs).map(|k| alloc::format!("u{k}")).collect(),
        };
        Self::with_labels(a, b, c, d, domain, labels, vec!["I".to_string()])
    }

    pub fn with_labels(
        a: Matrix,
        b: Matrix,
        c: Matrix,
        d: Matrix,
        domain: Domain,
        input_labels: Vec<String>,
        output_labels: Vec<String>,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(alloc::format!("A is {}x{}", n, a.ncols())));
        }
        if b.nrows() != n || c.ncols() != n {
            return Err(Error::Dimension(alloc::format!(
                "B is {}x{}, C is {}x{} for {n} states",
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::Dimension(alloc::format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        if b.ncols() == 0 || c.nrows() == 0 {
            return Err(Error::Dimension("plant needs at least one input and one output".into()));
        }
        if input_labels.len() != b.ncols() || output_labels.len() != c.nrows() {
            return Err(Error::Dimension("label count does not match plant dimensions".into()));
        }
        if let Domain::Discrete { dt } = domain {
            if !(dt > 0.0) {
                return Err(Error::param("dt", "discrete plant needs a positive step"));
            }
        }
        let finite = |m: &Matrix| m.iter().all(|v| v.is_finite());
        if !(finite(&a) && finite(&b) && finite(&c) && finite(&d)) {
            return Err(Error::Numerical("plant matrices contain non-finite entries".into()));
        }
        Ok(PlantModel {
            a,
            b,
            c,
            d,
            domain,
            input_labels,
            output_labels,
        })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn d(&self) -> &Matrix {
        &self.d
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn input_labels(&self) -> &[String] {
        &self.input_labels
    }

    pub fn output_labels(&self) -> &[String] {
        &self.output_labels
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        linalg::eigenvalues(&self.a)
    }

    pub fn is_stable(&self) -> bool {
        if self.order() == 0 {
            return true;
        }
        match self.domain {
            Domain::Continuous => linalg::spectral_abscissa(&self.a) < 0.0,
            Domain::Discrete { .. } => linalg::spectral_radius(&self.a) < 1.0,
        }
    }

    pub fn check_stable(&self) -> Result<()> {
        if self.is_stable() {
            return Ok(());
        }
        let max_real = match self.domain {
            Domain::Continuous => linalg::spectral_abscissa(&self.a),
            Domain::Discrete { .. } => linalg::spectral_radius(&self.a),
        };
        Err(Error::Unstable { max_real })
    }

    /// Exact zero-order-hold equivalent at step `dt`.
    pub fn discretize(&self, dt: f64) -> Result<PlantModel> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::param("dt", "must be positive"));
        }
        match self.domain {
            Domain::Continuous => {
                let (ad, bd) = linalg::zoh(&self.a, &self.b, dt);
                Ok(PlantModel {
                    a: ad,
                    b: bd,
                    domain: Domain::Discrete { dt },
                    ..self.clone()
                })
            }
            Domain::Discrete { dt: own } if crate::waveform::same_dt(own, dt) => Ok(self.clone()),
            Domain::Discrete { dt: own } => Err(Error::DtMismatch { left: own, right: dt }),
        }
    }

    /// Frequency response from `input` to the first output at `omega` rad/s
    /// (continuous plants) or at `e^{j omega dt}` (discrete plants).
    pub fn frequency_response(&self, input: usize, omega: f64) -> Result<Complex64> {
        if input >= self.inputs() {
            return Err(Error::Dimension(alloc::format!("no input {input}")));
        }
        let z = match self.domain {
            Domain::Continuous => Complex64::new(0.0, omega),
            Domain::Discrete { dt } => Complex64::from_polar(1.0, omega * dt),
        };
        let n = self.order();
        let d = Complex64::new(self.d[(0, input)], 0.0);
        if n == 0 {
            return Ok(d);
        }
        let m = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
            let diag = if i == j { z } else { Complex64::new(0.0, 0.0) };
            diag - Complex64::new(self.a[(i, j)], 0.0)
        });
        let rhs = DMatrix::<Complex64>::from_fn(n, 1, |i, _| Complex64::new(self.b[(i, input)], 0.0));
        let x = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("frequency lies on a plant pole".into()))?;
        let mut y = d;
        for k in 0..n {
            y += Complex64::new(self.c[(0, k)], 0.0) * x[(k, 0)];
        }
        Ok(y)
    }
}

/// The equivalent circuit as a plant with states `[i_L, v_C]`: terminal
/// voltage drives `R1 + L` into node `X`, where `R2 ∥ C` go to ground and the
/// source current is injected.
pub fn build_plant_from_circuit(params: &CircuitParams) -> Result<PlantModel> {
    params.check()?;
    let CircuitParams { l, r1, r2, c } = *params;
    let a = Matrix::from_row_slice(2, 2, &[-r1 / l, -1.0 / l, 1.0 / c, -1.0 / (r2 * c)]);
    let b = Matrix::from_row_slice(2, 2, &[1.0 / l, 0.0, 0.0, 1.0 / c]);
    let cm = Matrix::from_row_slice(1, 2, &[1.0, 0.0]);
    PlantModel::new(a, b, cm, Matrix::zeros(1, 2), Domain::Continuous)
}

/// One section of an RLC ladder: a series `R + L` branch, then optionally a
/// shunt capacitor (with an optional parallel resistor) to ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderSection {
    pub series_r: f64,
    pub series_l: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shunt_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shunt_r: Option<f64>,
}

impl LadderSection {
    pub const fn series(r: f64, l: f64) -> Self {
        LadderSection {
            series_r: r,
            series_l: l,
            shunt_c: None,
            shunt_r: None,
        }
    }

    pub const fn with_shunt(r: f64, l: f64, c: f64, shunt_r: Option<f64>) -> Self {
        LadderSection {
            series_r: r,
            series_l: l,
            shunt_c: Some(c),
            shunt_r,
        }
    }
}

/// State-space model of an RLC ladder driven at its input port.
///
/// States are ordered `[i_1, v_1, i_2, v_2, ...]`. Every section except the
/// last needs a shunt capacitor; a last section without one is shorted to
/// ground. The source current enters at the last shunt node.
pub fn build_ladder_plant(sections: &[LadderSection]) -> Result<PlantModel> {
    if sections.is_empty() {
        return Err(Error::EmptyLadder);
    }
    let last = sections.len() - 1;
    // Column of each section's inductor current and capacitor voltage.
    let mut cur = Vec::with_capacity(sections.len());
    let mut volt = Vec::with_capacity(sections.len());
    let mut n = 0;
    for (k, s) in sections.iter().enumerate() {
        if !(s.series_l > 0.0) || !s.series_l.is_finite() {
            return Err(Error::param(
                "series_l",
                alloc::format!("section {k}: must be positive"),
            ));
        }
        if !s.series_r.is_finite() {
            return Err(Error::param("series_r", alloc::format!("section {k}: must be finite")));
        }
        match (s.shunt_c, s.shunt_r) {
            (Some(c), r) => {
                if !(c > 0.0) || !c.is_finite() {
                    return Err(Error::param("shunt_c", alloc::format!("section {k}: must be positive")));
                }
                if let Some(r) = r {
                    if r == 0.0 || !r.is_finite() {
                        return Err(Error::param("shunt_r", alloc::format!("section {k}: must be nonzero")));
                    }
                }
            }
            (None, Some(_)) => {
                return Err(Error::param(
                    "shunt_r",
                    alloc::format!("section {k}: needs a shunt capacitor"),
                ));
            }
            (None, None) if k != last => {
                return Err(Error::param(
                    "shunt_c",
                    alloc::format!("section {k}: only the last section may omit its shunt"),
                ));
            }
            (None, None) => {}
        }
        cur.push(n);
        n += 1;
        volt.push(s.shunt_c.map(|_| {
            n += 1;
            n - 1
        }));
    }

    let mut a = Matrix::zeros(n, n);
    let mut b = Matrix::zeros(n, 2);
    for (k, s) in sections.iter().enumerate() {
        let i = cur[k];
        let l = s.series_l;
        a[(i, i)] = -s.series_r / l;
        if k == 0 {
            b[(i, 0)] = 1.0 / l;
        } else {
            let up = volt[k - 1].expect("checked above");
            a[(i, up)] += 1.0 / l;
        }
        if let Some(v) = volt[k] {
            let c = s.shunt_c.expect("checked above");
            a[(i, v)] -= 1.0 / l;
            a[(v, i)] += 1.0 / c;
            if k < last {
                a[(v, cur[k + 1])] -= 1.0 / c;
            }
            if let Some(r) = s.shunt_r {
                a[(v, v)] -= 1.0 / (r * c);
            }
        }
    }
    if let Some((k, v)) = volt.iter().enumerate().rev().find_map(|(k, v)| v.map(|v| (k, v))) {
        b[(v, 1)] = 1.0 / sections[k].shunt_c.expect("checked above");
    }
    let mut c = Matrix::zeros(1, n);
    c[(0, cur[0])] = 1.0;
    PlantModel::new(a, b, c, Matrix::zeros(1, 2), Domain::Continuous)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::circuit_to_tf;
    use approx::assert_relative_eq;

    fn normal() -> CircuitParams {
        CircuitParams::from_table_units(14.72, -1.402, 24.58, 34.52)
    }

    #[test]
    fn circuit_plant_matches_admittance_coefficients() {
        let p = normal();
        let plant = build_plant_from_circuit(&p).unwrap();
        assert!(plant.is_stable());
        let tf = circuit_to_tf(&p).unwrap();
        // Characteristic polynomial s² + c s + d from trace and determinant.
        let a = plant.a();
        let tr = a[(0, 0)] + a[(1, 1)];
        let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        assert_relative_eq!(-tr, tf.c, max_relative = 1e-12);
        assert_relative_eq!(det, tf.d, max_relative = 1e-12);
        // Numerator a s + b: C B and C A B + c C B.
        let cb = (plant.c() * plant.b())[(0, 0)];
        let cab = (plant.c() * a * plant.b())[(0, 0)];
        assert_relative_eq!(cb, tf.a, max_relative = 1e-12);
        assert_relative_eq!(cab + tf.c * cb, tf.b, max_relative = 1e-12);
        for omega in [0.0, 377.0, 1e4] {
            let y = plant.frequency_response(0, omega).unwrap();
            assert_relative_eq!((y - tf.response(omega)).norm() / y.norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn lossless_limit_poles() {
        let (l, c) = (2e-3, 10e-6);
        let plant = build_plant_from_circuit(&CircuitParams::new(l, 0.0, 1e12, c)).unwrap();
        let w = 1.0 / (l * c).sqrt();
        for p in plant.eigenvalues() {
            assert!(p.re.abs() < 1e-6 * w);
            assert_relative_eq!(p.im.abs(), w, max_relative = 1e-9);
        }
    }

    #[test]
    fn rejects_nonpositive_reactances() {
        assert!(build_plant_from_circuit(&CircuitParams::new(0.0, 1.0, 1.0, 1e-6)).is_err());
        assert!(build_plant_from_circuit(&CircuitParams::new(1e-3, 1.0, 1.0, -1e-6)).is_err());
    }

    #[test]
    fn single_series_branch() {
        let plant = build_ladder_plant(&[LadderSection::series(3.0, 0.5)]).unwrap();
        assert_eq!(plant.order(), 1);
        assert_relative_eq!(plant.a()[(0, 0)], -6.0);
        let y = plant.frequency_response(0, 10.0).unwrap();
        let expect = Complex64::new(1.0, 0.0) / Complex64::new(3.0, 5.0);
        assert_relative_eq!((y - expect).norm(), 0.0, epsilon = 1e-14);
        assert_eq!(plant.b()[(0, 1)], 0.0);
    }

    #[test]
    fn one_section_ladder_is_the_circuit() {
        let p = normal();
        let ladder = build_ladder_plant(&[LadderSection::with_shunt(p.r1, p.l, p.c, Some(p.r2))]).unwrap();
        let circuit = build_plant_from_circuit(&p).unwrap();
        assert_eq!(ladder, circuit);
    }

    #[test]
    fn ladder_order_counts_reactive_elements() {
        let s = LadderSection::with_shunt(0.5, 1e-3, 20e-6, Some(100.0));
        assert_eq!(build_ladder_plant(&[s, s, s]).unwrap().order(), 6);
        let tail = LadderSection::series(0.5, 1e-3);
        assert_eq!(build_ladder_plant(&[s, s, tail]).unwrap().order(), 5);
        assert!(matches!(build_ladder_plant(&[]), Err(Error::EmptyLadder)));
        assert!(build_ladder_plant(&[tail, s]).is_err());
    }

    #[test]
    fn discretize_is_zoh() {
        let plant = build_ladder_plant(&[LadderSection::series(2.0, 1e-2)]).unwrap();
        let d = plant.discretize(1e-3).unwrap();
        assert_relative_eq!(d.a()[(0, 0)], (-0.2f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(d.b()[(0, 0)], (1.0 - (-0.2f64).exp()) / 2.0, max_relative = 1e-12);
        assert!(d.discretize(2e-3).is_err());
        assert_eq!(d.discretize(1e-3).unwrap(), d);
    }

    #[test]
    fn dimension_checks() {
        let a = Matrix::zeros(2, 2);
        assert!(PlantModel::new(
            a.clone(),
            Matrix::zeros(3, 1),
            Matrix::zeros(1, 2),
            Matrix::zeros(1, 1),
            Domain::Continuous
        )
        .is_err());
        assert!(PlantModel::new(
            a,
            Matrix::zeros(2, 1),
            Matrix::zeros(1, 2),
            Matrix::zeros(1, 2),
            Domain::Continuous
        )
        .is_err());
    }
}
