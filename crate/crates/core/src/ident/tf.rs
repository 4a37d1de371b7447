use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// `(a s + b) / (s² + c s + d)`: the terminal admittance of the equivalent
/// feeder model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferFunction2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl TransferFunction2 {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        TransferFunction2 { a, b, c, d }
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        (s * self.a + self.b) / (s * s + s * self.c + self.d)
    }

    /// Frequency response at `omega` rad/s.
    pub fn response(&self, omega: f64) -> Complex64 {
        self.eval(Complex64::new(0.0, omega))
    }

    /// Roots of `s² + c s + d`.
    pub fn poles(&self) -> [Complex64; 2] {
        let half = -0.5 * self.c;
        let disc = Complex64::new(0.25 * self.c * self.c - self.d, 0.0).sqrt();
        [half + disc, half - disc]
    }

    /// Both poles strictly in the left half-plane.
    pub fn is_stable(&self) -> bool {
        self.c > 0.0 && self.d > 0.0
    }

    /// Damped natural frequency `sqrt(d - c²/4)` in rad/s; zero when overdamped.
    pub fn damped_frequency(&self) -> f64 {
        (self.d - 0.25 * self.c * self.c).max(0.0).sqrt()
    }
}
