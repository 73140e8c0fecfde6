use nalgebra::Cholesky;

use super::eig::hermitian_eig;
use crate::{CMatrix, CVector, Error, Result};

/// `max |A_ij − conj(A_ji)|` relative to `‖A‖_F` (absolute when `A = 0`).
pub fn hermitian_asymmetry(a: &CMatrix) -> f64 {
    let n = a.nrows();
    if n != a.ncols() {
        return f64::INFINITY;
    }
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    let scale = a.norm();
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

/// Solves `A x = b` for Hermitian positive-definite `A` by Cholesky
/// factorisation.
pub fn solve_hermitian_pd(a: &CMatrix, b: &CVector) -> Result<CVector> {
    let n = a.nrows();
    if n != a.ncols() || b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "solve: A is {}x{}, b has length {}",
            n,
            a.ncols(),
            b.len()
        )));
    }
    let asym = hermitian_asymmetry(a);
    if asym > 1e-10 {
        return Err(Error::NotHermitian(asym));
    }
    let chol = Cholesky::new(a.clone()).ok_or(Error::NotPositiveDefinite)?;
    // The complex factorisation takes square roots of arbitrary pivots, so an
    // indefinite input shows up as a non-real or non-positive pivot.
    let l = chol.l_dirty();
    for i in 0..n {
        let p = l[(i, i)];
        if !(p.re > 0.0) || p.im.abs() > 1e-12 * p.re {
            return Err(Error::NotPositiveDefinite);
        }
    }
    Ok(chol.solve(b))
}

/// Frobenius-nearest positive semidefinite matrix: negative eigenvalues are
/// clamped to zero.
pub fn psd_project(a: &CMatrix) -> Result<CMatrix> {
    let mut eig = hermitian_eig(a)?;
    for l in eig.eigenvalues.iter_mut() {
        *l = l.max(0.0);
    }
    let x = eig.reconstruct();
    Ok(CMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
        0.5 * (x[(i, j)] + x[(j, i)].conj())
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let b = CVector::from_vec(vec![c(1.0, 2.0), c(-3.0, 0.5)]);
        let x = solve_hermitian_pd(&CMatrix::identity(2, 2), &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn scaled_identity_solve() {
        let a = CMatrix::identity(2, 2) * c(2.0, 0.0);
        let b = CVector::from_vec(vec![c(2.0, 0.0), c(4.0, 0.0)]);
        let x = solve_hermitian_pd(&a, &b).unwrap();
        assert!((x[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((x[1] - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn indefinite_is_rejected() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);
        let b = CVector::from_element(2, c(1.0, 0.0));
        assert_eq!(solve_hermitian_pd(&a, &b), Err(Error::NotPositiveDefinite));
    }

    #[test]
    fn dimension_mismatch() {
        let b = CVector::from_element(3, c(1.0, 0.0));
        assert!(matches!(
            solve_hermitian_pd(&CMatrix::identity(2, 2), &b),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn clamps_negative_eigenvalue() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0)]));
        let x = psd_project(&a).unwrap();
        let expected = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));
        assert!((x - expected).norm() < 1e-15);
    }

    #[test]
    fn psd_input_is_unchanged() {
        let a = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(1.0, 0.0)]);
        let x = psd_project(&a).unwrap();
        assert!((x - &a).norm() < 1e-10 * a.norm());
    }
}
