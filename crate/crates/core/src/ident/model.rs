use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, Matrix};
use crate::{Error, Result};

use super::HankelPair;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Continuous,
    Discrete { dt: f64 },
}

/// Single-input single-output state-space model `(A, B, C, D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedModel {
    pub a: Matrix,
    /// `r × 1`.
    pub b: Matrix,
    /// `1 × r`.
    pub c: Matrix,
    pub d: f64,
    pub domain: Domain,
    /// Hankel singular values the model was realized from (descending).
    pub hankel_singular_values: Vec<f64>,
    /// `max_k |C A^(k-1) B - z_p(k)| / max |z_p|` at realization time.
    pub markov_error: f64,
}

impl RealizedModel {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        linalg::eigenvalues(&self.a)
    }

    /// The first `count` Markov parameters `C A^(k-1) B`, `k = 1..=count`.
    pub fn markov_parameters(&self, count: usize) -> Vec<f64> {
        let mut x = self.b.clone();
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push((&self.c * &x)[(0, 0)]);
            x = &self.a * x;
        }
        out
    }

    /// Asymptotic stability in the model's own domain.
    pub fn is_stable(&self) -> bool {
        match self.domain {
            Domain::Continuous => linalg::spectral_abscissa(&self.a) < 0.0,
            Domain::Discrete { .. } => linalg::spectral_radius(&self.a) < 1.0,
        }
    }

    /// Exact zero-order-hold discretization of a continuous model.
    pub fn discretize(&self, dt: f64) -> Result<RealizedModel> {
        if self.domain != Domain::Continuous {
            return Err(Error::param("model", "only continuous models can be discretized"));
        }
        let (a, b) = linalg::zoh(&self.a, &self.b, dt);
        Ok(RealizedModel {
            a,
            b,
            domain: Domain::Discrete { dt },
            ..self.clone()
        })
    }
}

/// Balanced (Ho–Kalman) realization of order `r` from the truncated SVD
/// `H ≈ U_r Σ_r V_rᵀ`:
///
/// `A = Σ^(-1/2) U_rᵀ H_shift V_r Σ^(-1/2)`, `B` = first column of
/// `Σ^(1/2) V_rᵀ`, `C` = first row of `U_r Σ^(1/2)`, `D = 0`.
pub fn balanced_realization(hankel: &HankelPair, r: usize) -> Result<RealizedModel> {
    let sigma = &hankel.singular_values;
    if r == 0 || r > hankel.m {
        return Err(Error::param("order", alloc::format!("must lie in 1..={}", hankel.m)));
    }
    if sigma[0] == 0.0 {
        return Err(Error::ZeroHankel);
    }
    let ratio = sigma[r - 1] / sigma[0];
    if ratio < 1e-12 {
        return Err(Error::RankDeficient { r, ratio });
    }
    let ur = hankel.u.columns(0, r);
    let vr = hankel.v.columns(0, r);
    let inv_sqrt = Matrix::from_diagonal(&nalgebra::DVector::from_iterator(
        r,
        sigma[..r].iter().map(|s| 1.0 / s.sqrt()),
    ));
    let sqrt: Vec<f64> = sigma[..r].iter().map(|s| s.sqrt()).collect();

    let a = &inv_sqrt * ur.transpose() * &hankel.h_shift * vr * &inv_sqrt;
    let b = Matrix::from_fn(r, 1, |i, _| sqrt[i] * vr[(0, i)]);
    let c = Matrix::from_fn(1, r, |_, j| ur[(0, j)] * sqrt[j]);

    let mut model = RealizedModel {
        a,
        b,
        c,
        d: 0.0,
        domain: Domain::Discrete { dt: hankel.dt },
        hankel_singular_values: sigma.clone(),
        markov_error: 0.0,
    };
    let count = 2 * hankel.m;
    let peak = hankel.source.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let worst = model
        .markov_parameters(count)
        .iter()
        .zip(&hankel.source)
        .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
    model.markov_error = worst / peak;
    Ok(model)
}

/// Inverts the zero-order-hold mapping: `A_c = log(A_d) / t0` and
/// `B_c = (∫_0^t0 e^(A_c τ) dτ)^(-1) B_d`.
pub fn to_continuous(model: &RealizedModel) -> Result<RealizedModel> {
    let Domain::Discrete { dt } = model.domain else {
        return Err(Error::param("model", "already continuous"));
    };
    let rho = linalg::spectral_radius(&model.a);
    if rho >= 1.0 {
        return Err(Error::Unstable {
            max_real: rho.ln() / dt,
        });
    }
    let log = linalg::logm(&model.a).map_err(|e| match e {
        Error::LogBranch(msg) => Error::LogBranch(alloc::format!(
            "{msg}; the realized model has a pole at or beyond half the sampling rate, re-probe with a smaller bit duration"
        )),
        other => other,
    })?;
    let a = log / dt;
    let gamma = linalg::exp_integral(&a, dt);
    let b = gamma
        .lu()
        .solve(&model.b)
        .ok_or_else(|| Error::Numerical("singular hold integral in d2c".into()))?;
    Ok(RealizedModel {
        a,
        b,
        c: model.c.clone(),
        d: model.d,
        domain: Domain::Continuous,
        hankel_singular_values: model.hankel_singular_values.clone(),
        markov_error: model.markov_error,
    })
}
