//! Dense matrix helpers shared by the plant simulator and the identifier.

use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::{Error, Result};

pub type Matrix = DMatrix<f64>;

pub fn eigenvalues(a: &Matrix) -> Vec<Complex64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    a.complex_eigenvalues().iter().copied().collect()
}

pub fn spectral_radius(a: &Matrix) -> f64 {
    eigenvalues(a).iter().fold(0.0, |m, l| m.max(l.norm()))
}

/// Largest eigenvalue real part; negative for a Hurwitz matrix.
pub fn spectral_abscissa(a: &Matrix) -> f64 {
    eigenvalues(a).iter().fold(f64::NEG_INFINITY, |m, l| m.max(l.re))
}

/// Singular value decomposition `A = U diag(σ) Vᵀ` with `σ` descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    fn residual(&self, a: &Matrix) -> f64 {
        let k = self.singular_values.len();
        let mut us = self.u.columns(0, k).into_owned();
        for (j, s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        (us * self.v.columns(0, k).transpose() - a).norm()
    }

    fn sorted(mut self) -> Self {
        let k = self.singular_values.len();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| self.singular_values[j].total_cmp(&self.singular_values[i]));
        self.u = Matrix::from_fn(self.u.nrows(), k, |r, c| self.u[(r, order[c])]);
        self.v = Matrix::from_fn(self.v.nrows(), k, |r, c| self.v[(r, order[c])]);
        self.singular_values = order.iter().map(|&i| self.singular_values[i]).collect();
        self
    }

    fn accept(self, a: &Matrix) -> Option<Self> {
        let scale = a.norm().max(f64::MIN_POSITIVE);
        (self.residual(a) <= 1e-10 * scale).then(|| self.sorted())
    }
}

fn from_nalgebra(svd: SVD<f64, nalgebra::Dyn, nalgebra::Dyn>) -> Option<Svd> {
    Some(Svd {
        u: svd.u?,
        singular_values: svd.singular_values.iter().copied().collect(),
        v: svd.v_t?.transpose(),
    })
}

/// Thin SVD, checked by reconstruction. The default bidiagonal iteration
/// occasionally stops on an inaccurate factorization; a tighter tolerance is
/// tried before giving up.
pub fn svd(a: &Matrix) -> Result<Svd> {
    if let Some(s) = from_nalgebra(SVD::new(a.clone(), true, true)).and_then(|s| s.accept(a)) {
        return Ok(s);
    }
    SVD::try_new(a.clone(), true, true, f64::EPSILON / 8.0, 100_000)
        .and_then(from_nalgebra)
        .and_then(|s| s.accept(a))
        .ok_or_else(|| Error::Numerical("SVD failed to converge to an accurate factorization".into()))
}

/// SVD of a symmetric matrix through its eigendecomposition:
/// `σ = |λ|`, `U = W`, `V = W sign(Λ)`.
pub fn symmetric_svd(a: &Matrix) -> Result<Svd> {
    let eig = SymmetricEigen::new(a.clone());
    let mut v = eig.eigenvectors.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        if *lambda < 0.0 {
            v.column_mut(j).neg_mut();
        }
    }
    let out = Svd {
        u: eig.eigenvectors,
        singular_values: eig.eigenvalues.iter().map(|l| l.abs()).collect(),
        v,
    };
    out.accept(a)
        .ok_or_else(|| Error::Numerical("symmetric eigendecomposition is inaccurate".into()))
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn expm(a: &Matrix) -> Matrix {
    const B: [f64; 14] = [
        64_764_752_532_480_000.0,
        32_382_376_266_240_000.0,
        7_771_770_303_897_600.0,
        1_187_353_796_428_800.0,
        129_060_195_264_000.0,
        10_559_470_521_600.0,
        670_442_572_800.0,
        33_522_128_640.0,
        1_323_241_920.0,
        40_840_800.0,
        960_960.0,
        16_380.0,
        182.0,
        1.0,
    ];
    const THETA_13: f64 = 5.371_920_351_148_152;
    let n = a.nrows();
    let ident = Matrix::identity(n, n);
    if n == 0 {
        return ident;
    }
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = if norm1 > THETA_13 {
        (norm1 / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let x = a * (2.0f64).powi(-s);
    let x2 = &x * &x;
    let x4 = &x2 * &x2;
    let x6 = &x4 * &x2;
    let u_inner = &x6 * (&x6 * B[13] + &x4 * B[11] + &x2 * B[9]) + &x6 * B[7] + &x4 * B[5] + &x2 * B[3] + &ident * B[1];
    let u = &x * u_inner;
    let v = &x6 * (&x6 * B[12] + &x4 * B[10] + &x2 * B[8]) + &x6 * B[6] + &x4 * B[4] + &x2 * B[2] + &ident * B[0];
    let mut r = (&v - &u)
        .lu()
        .solve(&(&v + &u))
        .expect("Padé denominator is nonsingular after scaling");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Zero-order-hold discretization: `(e^{A dt}, ∫_0^dt e^{A τ} dτ B)`, both
/// read off one exponential of the augmented matrix `[[A, B], [0, 0]]`.
pub fn zoh(a: &Matrix, b: &Matrix, dt: f64) -> (Matrix, Matrix) {
    let n = a.nrows();
    let m = b.ncols();
    let mut aug = Matrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * dt));
    aug.view_mut((0, n), (n, m)).copy_from(&(b * dt));
    let e = expm(&aug);
    (e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, m)).into_owned())
}

/// `∫_0^dt e^{A τ} dτ`.
pub fn exp_integral(a: &Matrix, dt: f64) -> Matrix {
    let n = a.nrows();
    zoh(a, &Matrix::identity(n, n), dt).1
}

fn sqrtm(a: &Matrix) -> Result<Matrix> {
    // Denman–Beavers iteration.
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = Matrix::identity(n, n);
    for _ in 0..100 {
        let y_inv = y
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular iterate in matrix square root".into()))?;
        let z_inv = z
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular iterate in matrix square root".into()))?;
        let y_next = (&y + z_inv) * 0.5;
        z = (&z + y_inv) * 0.5;
        let change = (&y_next - &y).norm();
        y = y_next;
        if change <= 1e-15 * y.norm() {
            return Ok(y);
        }
    }
    Err(Error::Numerical("matrix square root did not converge".into()))
}

/// Principal matrix logarithm by inverse scaling and squaring.
///
/// Fails when `a` has an eigenvalue on the closed negative real axis, where
/// no real principal logarithm exists.
pub fn logm(a: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    let scale = a.norm().max(f64::MIN_POSITIVE);
    for l in eigenvalues(a) {
        if l.im.abs() <= 1e-12 * scale && l.re <= 1e-14 * scale {
            return Err(Error::LogBranch(alloc::format!(
                "eigenvalue {} + {}i lies on the closed negative real axis; no real logarithm exists",
                l.re,
                l.im
            )));
        }
    }
    let eye = Matrix::identity(n, n);
    let mut x = a.clone();
    let mut halvings = 0u32;
    while (&x - &eye).norm() > 0.25 {
        x = sqrtm(&x)?;
        halvings += 1;
        if halvings > 64 {
            return Err(Error::Numerical("matrix logarithm scaling did not converge".into()));
        }
    }
    // log X = 2 atanh(Z), Z = (X - I)(X + I)^{-1}.
    let z = (&x - &eye)
        * (&x + &eye)
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular X + I in matrix logarithm".into()))?;
    let z2 = &z * &z;
    let mut term = z.clone();
    let mut sum = z;
    let mut k = 1.0;
    while k < 201.0 {
        term = &term * &z2;
        k += 2.0;
        let add = &term / k;
        sum += &add;
        if add.norm() <= 1e-18 * sum.norm().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(sum * (2.0 * f64::from(2u32).powi(halvings as i32)))
}

/// Solves `A X + X Aᵀ + Q = 0` through its Kronecker form. Intended for the
/// small models handled here.
pub fn lyapunov(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    if a.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::Dimension(
            "Lyapunov equation needs square, matching A and Q".into(),
        ));
    }
    let eye = Matrix::identity(n, n);
    let k = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = -Matrix::from_column_slice(n * n, 1, q.as_slice());
    let x = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular Lyapunov operator (A has eigenvalues summing to zero)".into()))?;
    let x = Matrix::from_column_slice(n, n, x.as_slice());
    Ok((&x + x.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn svd_reconstructs_a_hard_hankel() {
        // The default nalgebra SVD stops early on this matrix.
        let (r, t) = (0.9465998931297088f64, 2.0508630788699858f64);
        let a0 = Matrix::from_row_slice(2, 2, &[r * t.cos(), r * t.sin(), -r * t.sin(), r * t.cos()]);
        let q = Matrix::from_row_slice(2, 2, &[3.0, 0.0, -0.7768812114519148, 3.0])
            .qr()
            .q();
        let a = &q * a0 * q.transpose();
        let b = Matrix::from_row_slice(2, 1, &[1.321744997364607, 1.4756133693607527]);
        let c = Matrix::from_row_slice(1, 2, &[0.5, 0.5]);
        let mut x = b;
        let z: Vec<f64> = (0..41)
            .map(|_| {
                let v = (&c * &x)[(0, 0)];
                x = &a * &x;
                v
            })
            .collect();
        let h = Matrix::from_fn(20, 20, |i, j| z[i + j]);
        for s in [svd(&h).unwrap(), symmetric_svd(&h).unwrap()] {
            assert!(s.residual(&h) < 1e-12 * h.norm());
            assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
            assert!(s.singular_values[2] < 1e-12 * s.singular_values[0]);
        }
    }

    #[test]
    fn exp_of_rotation_generator() {
        for t in [0.1, 1.0, 7.5, 40.0] {
            let a = Matrix::from_row_slice(2, 2, &[0.0, t, -t, 0.0]);
            let e = expm(&a);
            let expect = Matrix::from_row_slice(2, 2, &[t.cos(), t.sin(), -t.sin(), t.cos()]);
            assert_relative_eq!(e, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn exp_of_jordan_block() {
        // exp([[l, 1], [0, l]]) = e^l [[1, 1], [0, 1]].
        let l = -12.0;
        let e = expm(&Matrix::from_row_slice(2, 2, &[l, 1.0, 0.0, l]));
        let el = l.exp();
        assert_relative_eq!(
            e,
            Matrix::from_row_slice(2, 2, &[el, el, 0.0, el]),
            max_relative = 1e-12
        );
    }

    #[test]
    fn scalar_log() {
        let a = Matrix::from_element(1, 1, (-1.0f64).exp());
        assert_relative_eq!(logm(&a).unwrap()[(0, 0)], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn log_inverts_exp_for_rotations() {
        let theta: f64 = 0.44;
        let r: f64 = 0.9;
        let a = Matrix::from_row_slice(
            2,
            2,
            &[r * theta.cos(), -r * theta.sin(), r * theta.sin(), r * theta.cos()],
        );
        let l = logm(&a).unwrap();
        assert_relative_eq!(l[(0, 0)], r.ln(), epsilon = 1e-13);
        assert_relative_eq!(l[(1, 0)], theta, epsilon = 1e-13);
        assert_relative_eq!(expm(&l), a, epsilon = 1e-13);
    }

    #[test]
    fn log_rejects_negative_real_eigenvalues() {
        let a = Matrix::from_row_slice(2, 2, &[-0.5, 0.0, 0.0, 0.3]);
        assert!(matches!(logm(&a), Err(Error::LogBranch(_))));
    }

    #[test]
    fn zoh_of_scalar_pole() {
        let a = Matrix::from_element(1, 1, -2.0);
        let b = Matrix::from_element(1, 1, 3.0);
        let (ad, bd) = zoh(&a, &b, 0.1);
        assert_relative_eq!(ad[(0, 0)], (-0.2f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(bd[(0, 0)], 3.0 * (1.0 - (-0.2f64).exp()) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn lyapunov_residual_vanishes() {
        let a = Matrix::from_row_slice(3, 3, &[-1.0, 2.0, 0.0, -2.0, -1.0, 0.5, 0.0, 0.0, -3.0]);
        let b = Matrix::from_row_slice(3, 1, &[1.0, 0.0, 2.0]);
        let q = &b * b.transpose();
        let x = lyapunov(&a, &q).unwrap();
        let residual = &a * &x + &x * a.transpose() + q;
        assert!(residual.norm() < 1e-12);
    }
}
