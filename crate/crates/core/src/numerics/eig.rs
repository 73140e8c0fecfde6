use num_complex::Complex64;

use super::linalg::hermitian_asymmetry;
use crate::{CMatrix, CVector, Error, Result};

const MAX_SWEEPS: usize = 100;
const OFF_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-10;

/// Spectral decomposition `A = V diag(λ) V^H` of a Hermitian matrix.
///
/// Eigenvalues are ascending. Each eigenvector column is normalised so that
/// its largest-magnitude component (lowest index among near-ties) is real and
/// positive.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl HermitianEig {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("empty decomposition")
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Unit eigenvector of the largest eigenvalue.
    pub fn top_eigenvector(&self) -> CVector {
        self.eigenvectors.column(self.dim() - 1).into_owned()
    }

    /// `V diag(λ) V^H`.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.dim();
        let mut scaled = self.eigenvectors.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(lambda);
        }
        let mut out = scaled * self.eigenvectors.adjoint();
        for i in 0..n {
            out[(i, i)].im = 0.0;
        }
        out
    }
}

/// Cyclic complex Jacobi eigendecomposition.
///
/// Sweeps the strict upper triangle in row-major order and annihilates each
/// off-diagonal entry with a unitary plane rotation, stopping once the
/// off-diagonal Frobenius mass is below `1e-12·‖A‖_F`.
pub fn hermitian_eig(a: &CMatrix) -> Result<HermitianEig> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::DimensionMismatch("empty matrix".into()));
    }
    let asym = hermitian_asymmetry(a);
    if asym > HERMITIAN_TOL {
        return Err(Error::NotHermitian(asym));
    }

    let mut m = CMatrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)].conj()));
    for i in 0..n {
        m[(i, i)].im = 0.0;
    }
    let mut v = CMatrix::identity(n, n);
    let norm = m.norm();

    if norm > 0.0 {
        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            if off_diagonal_norm(&m) <= OFF_TOL * norm {
                converged = true;
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    rotate(&mut m, &mut v, p, q);
                }
            }
        }
        if !converged && off_diagonal_norm(&m) > OFF_TOL * norm {
            return Err(Error::NotConverged {
                iterations: MAX_SWEEPS,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &v.column(src));
        fix_phase(&mut eigenvectors, dst);
    }
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut sum = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                sum += m[(i, j)].norm_sqr();
            }
        }
    }
    sum.sqrt()
}

fn rotate(m: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let b = apq.norm();
    if b == 0.0 {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    // Negligible against both diagonal entries: drop it instead of rotating.
    if app.abs() + 1e3 * b == app.abs() && aqq.abs() + 1e3 * b == aqq.abs() {
        m[(p, q)] = Complex64::new(0.0, 0.0);
        m[(q, p)] = Complex64::new(0.0, 0.0);
        return;
    }

    let phase = apq / b;
    let phase_conj = phase.conj();
    let tau = (aqq - app) / (2.0 * b);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let n = m.nrows();

    // A <- A J with J = diag(1, e^{-iφ}) · [[c, s], [-s, c]] on (p, q).
    for r in 0..n {
        let x = m[(r, p)];
        let y = m[(r, q)] * phase_conj;
        m[(r, p)] = x * c - y * s;
        m[(r, q)] = x * s + y * c;
    }
    // A <- J^H A
    for r in 0..n {
        let x = m[(p, r)];
        let y = m[(q, r)] * phase;
        m[(p, r)] = x * c - y * s;
        m[(q, r)] = x * s + y * c;
    }
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);
    m[(p, p)] = Complex64::new(app - t * b, 0.0);
    m[(q, q)] = Complex64::new(aqq + t * b, 0.0);

    for r in 0..n {
        let x = v[(r, p)];
        let y = v[(r, q)] * phase_conj;
        v[(r, p)] = x * c - y * s;
        v[(r, q)] = x * s + y * c;
    }
}

/// Rotates `v` by a global phase so that its largest-magnitude component
/// (lowest index among near-ties) is real and positive. Zero vectors are left
/// unchanged.
pub fn canonical_phase(v: &mut CVector) {
    let mut m = CMatrix::from_column_slice(v.len(), 1, v.as_slice());
    fix_phase(&mut m, 0);
    v.copy_from(&m.column(0));
}

fn fix_phase(vectors: &mut CMatrix, col: usize) {
    let column = vectors.column(col);
    let max = column.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = column
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-9))
        .expect("maximum exists");
    let z = column[pivot];
    let rot = z.conj() / z.norm();
    let mut column = vectors.column_mut(col);
    for entry in column.iter_mut() {
        *entry *= rot;
    }
    column[pivot] = Complex64::new(column[pivot].norm(), 0.0);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let eig = hermitian_eig(&CMatrix::identity(3, 3)).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn all_ones_is_rank_one() {
        for n in 1..7 {
            let ones = CMatrix::from_element(n, n, c(1.0, 0.0));
            let eig = hermitian_eig(&ones).unwrap();
            assert!((eig.max_eigenvalue() - n as f64).abs() < 1e-12);
            for &l in &eig.eigenvalues[..n - 1] {
                assert!(l.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_by_two_complex() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3.
        let a = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let eig = hermitian_eig(&a).unwrap();
        assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 3.0).abs() < 1e-14);
        let recon = eig.reconstruct();
        assert!((recon - a).norm() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(hermitian_eig(&a), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn rejects_non_square() {
        let a = CMatrix::zeros(2, 3);
        assert!(matches!(hermitian_eig(&a), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn zero_matrix() {
        let eig = hermitian_eig(&CMatrix::zeros(4, 4)).unwrap();
        assert!(eig.eigenvalues.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn phase_convention_makes_pivot_real_positive() {
        let a = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(2.0, 0.0),
                c(0.3, -0.7),
                c(0.1, 0.2),
                c(0.3, 0.7),
                c(1.0, 0.0),
                c(-0.4, 0.5),
                c(0.1, -0.2),
                c(-0.4, -0.5),
                c(3.0, 0.0),
            ],
        );
        let eig = hermitian_eig(&a).unwrap();
        for j in 0..3 {
            let col = eig.eigenvectors.column(j);
            let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let pivot = col.iter().position(|z| z.norm() >= max * (1.0 - 1e-9)).unwrap();
            assert_eq!(col[pivot].im, 0.0);
            assert!(col[pivot].re > 0.0);
        }
    }
}
