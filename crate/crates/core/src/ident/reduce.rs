use alloc::vec::Vec;

use nalgebra::{Cholesky, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, Matrix};
use crate::{Error, Result};

use super::{Domain, RealizedModel, TransferFunction2};

/// Relative size below which a numerator `s²` term is treated as zero.
pub const S2_RESIDUE_TOL: f64 = 1e-6;

/// Diagnostics raised alongside a second-order fit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitFlags {
    /// `c <= 0` or `d <= 0`: a pole on or right of the imaginary axis.
    pub unstable: bool,
    /// `d` vanishes next to `c²`: the data carries only first-order dynamics.
    pub near_degenerate: bool,
}

impl FitFlags {
    pub fn any(&self) -> bool {
        self.unstable || self.near_degenerate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderFit {
    pub tf: TransferFunction2,
    pub flags: FitFlags,
    /// Order of the model handed in.
    pub source_order: usize,
    /// `2 Σ` of the discarded continuous Hankel singular values, an H∞ bound
    /// on the truncation error; zero when no reduction was needed.
    pub truncation_bound: f64,
}

/// Symmetric positive semidefinite square-root factor `L` with `W ≈ L Lᵀ`.
fn psd_factor(w: &Matrix) -> Matrix {
    if let Some(ch) = Cholesky::new(w.clone()) {
        return ch.l();
    }
    let eig = SymmetricEigen::new(w.clone());
    let mut l = eig.eigenvectors.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        l.column_mut(j).scale_mut(s);
    }
    l
}

/// Square-root balanced truncation of a stable continuous model to `k` states.
/// Returns the reduced model and the full continuous Hankel spectrum.
pub fn balanced_truncation(model: &RealizedModel, k: usize) -> Result<(RealizedModel, Vec<f64>)> {
    if model.domain != Domain::Continuous {
        return Err(Error::param("model", "balanced truncation expects a continuous model"));
    }
    let n = model.order();
    if k == 0 || k > n {
        return Err(Error::param("order", alloc::format!("must lie in 1..={n}")));
    }
    let abscissa = linalg::spectral_abscissa(&model.a);
    if abscissa >= 0.0 {
        return Err(Error::Unstable { max_real: abscissa });
    }
    let wc = linalg::lyapunov(&model.a, &(&model.b * model.b.transpose()))?;
    let wo = linalg::lyapunov(&model.a.transpose(), &(model.c.transpose() * &model.c))?;
    let lc = psd_factor(&wc);
    let lo = psd_factor(&wo);
    let linalg::Svd {
        u,
        singular_values: hsv,
        v,
    } = linalg::svd(&(lo.transpose() * &lc))?;
    if hsv[k - 1] <= 1e-14 * hsv[0] {
        return Err(Error::RankDeficient {
            r: k,
            ratio: hsv[k - 1] / hsv[0],
        });
    }
    let scale = Matrix::from_diagonal(&nalgebra::DVector::from_iterator(
        k,
        hsv[..k].iter().map(|s| 1.0 / s.sqrt()),
    ));
    let t = &lc * v.columns(0, k) * &scale;
    let t_inv = &scale * u.columns(0, k).transpose() * lo.transpose();
    let reduced = RealizedModel {
        a: &t_inv * &model.a * &t,
        b: &t_inv * &model.b,
        c: &model.c * &t,
        d: model.d,
        domain: Domain::Continuous,
        hankel_singular_values: model.hankel_singular_values.clone(),
        markov_error: model.markov_error,
    };
    Ok((reduced, hsv))
}

/// Reads `(a s + b) / (s² + c s + d)` off a continuous model, reducing it to
/// two states by balanced truncation first when it is larger.
pub fn to_second_order_tf(model: &RealizedModel) -> Result<SecondOrderFit> {
    if model.domain != Domain::Continuous {
        return Err(Error::param("model", "expected a continuous model"));
    }
    let source_order = model.order();
    let (tf, truncation_bound) = match source_order {
        0 => return Err(Error::param("model", "model has no states")),
        1 => {
            // g / (s - p) written over s² - p s: the second pole sits at the origin.
            let p = model.a[(0, 0)];
            let g = model.b[(0, 0)] * model.c[(0, 0)];
            if model.d.abs() > S2_RESIDUE_TOL * g.abs() {
                return Err(s2_mismatch(model.d, g));
            }
            (TransferFunction2::new(g, 0.0, -p, 0.0), 0.0)
        }
        2 => (two_state_tf(model)?, 0.0),
        _ => {
            let (reduced, hsv) = balanced_truncation(model, 2)?;
            let bound = 2.0 * hsv[2..].iter().sum::<f64>();
            (two_state_tf(&reduced)?, bound)
        }
    };
    let scale = tf.c * tf.c;
    let flags = FitFlags {
        unstable: !tf.is_stable(),
        near_degenerate: tf.d.abs() <= 1e-9 * scale.max(f64::MIN_POSITIVE),
    };
    if flags.any() {
        log::warn!("second-order fit flagged: {flags:?} for {tf:?}");
    }
    Ok(SecondOrderFit {
        tf,
        flags,
        source_order,
        truncation_bound,
    })
}

fn s2_mismatch(d: f64, a: f64) -> Error {
    Error::StructureMismatch(alloc::format!(
        "numerator s² coefficient {d:e} is not negligible next to the s coefficient {a:e}; the response is not relative-degree one"
    ))
}

fn two_state_tf(model: &RealizedModel) -> Result<TransferFunction2> {
    // adj(sI - A) = sI + (A - tr(A) I) for 2×2 A.
    let a = &model.a;
    let trace = a[(0, 0)] + a[(1, 1)];
    let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let cb = (&model.c * &model.b)[(0, 0)];
    let cab = (&model.c * a * &model.b)[(0, 0)];
    let c = -trace;
    let d = det;
    let s1 = cb + model.d * c;
    if model.d.abs() > S2_RESIDUE_TOL * s1.abs() {
        return Err(s2_mismatch(model.d, s1));
    }
    Ok(TransferFunction2::new(cb, cab - trace * cb, c, d))
}
