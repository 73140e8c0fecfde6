//! ADMM solver for the fixed-diagonal complex semidefinite program
//!
//! ```text
//! maximise tr(C·X)  subject to  X ⪰ 0,  X_ii = d,
//! ```
//!
//! the relaxation of the phase-only gain design, plus an exhaustive
//! phase-grid search used as a verification oracle.
//!
//! Each iteration costs one `L x L` eigendecomposition, i.e. `O(L³)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::numerics::{hermitian_asymmetry, hermitian_eig, psd_project};
use crate::par::Execution;
use crate::{CMatrix, CVector, Error, Result};

const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    cost: CMatrix,
    diag_value: f64,
}

impl SdpProblem {
    pub fn new(cost: CMatrix, diag_value: f64) -> Result<Self> {
        if cost.nrows() != cost.ncols() || cost.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "cost must be square and non-empty, got {}x{}",
                cost.nrows(),
                cost.ncols()
            )));
        }
        let asym = hermitian_asymmetry(&cost);
        if asym > HERMITIAN_TOL {
            return Err(Error::NotHermitian(asym));
        }
        if !(diag_value > 0.0 && diag_value.is_finite()) {
            return Err(Error::param(
                "diag_value",
                format!("must be positive, got {diag_value}"),
            ));
        }
        Ok(Self { cost, diag_value })
    }

    pub fn cost(&self) -> &CMatrix {
        &self.cost
    }
    pub fn diag_value(&self) -> f64 {
        self.diag_value
    }
    pub fn dim(&self) -> usize {
        self.cost.nrows()
    }
}

/// Scaled-form ADMM settings with a fixed penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmSettings {
    pub rho: f64,
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub max_iter: usize,
}

impl AdmmSettings {
    /// Defaults for an `l x l` problem with diagonal `d`: `ρ = 1`,
    /// tolerances `1e-7·l·d`, at most 5000 iterations.
    pub fn for_problem(l: usize, d: f64) -> Self {
        let tol = 1e-7 * l as f64 * d;
        Self {
            rho: 1.0,
            tol_primal: tol,
            tol_dual: tol,
            max_iter: 5000,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::param("rho", "must be positive"));
        }
        if !(self.tol_primal > 0.0) || !(self.tol_dual > 0.0) {
            return Err(Error::param("tol", "tolerances must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub x: CMatrix,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// `Re tr(C·X)`.
fn trace_product(c: &CMatrix, x: &CMatrix) -> f64 {
    let n = c.nrows();
    let mut t = 0.0;
    for i in 0..n {
        for j in 0..n {
            t += (c[(i, j)] * x[(j, i)]).re;
        }
    }
    t
}

/// Solves the problem by ADMM on the normalised instance
/// `C/‖C‖_F`, `d = 1` and rescales the result.
///
/// Each iteration takes the closed-form affine step (cost ascent with the
/// diagonal pinned), projects onto the PSD cone and updates the scaled dual.
/// The returned `X` is the PSD iterate with its diagonal rescaled to exactly
/// `d`, which keeps it PSD. Residuals are reported in the original scale.
/// Hitting `max_iter` is not an error: the solution comes back with
/// `converged = false`.
pub fn solve_sdp(problem: &SdpProblem, settings: &AdmmSettings) -> Result<SdpSolution> {
    settings.validate()?;
    let n = problem.dim();
    let d = problem.diag_value;
    let c_norm = problem.cost.norm();
    if c_norm == 0.0 {
        return Ok(SdpSolution {
            x: CMatrix::identity(n, n) * Complex64::new(d, 0.0),
            objective: 0.0,
            iterations: 0,
            converged: true,
            primal_residual: 0.0,
            dual_residual: 0.0,
        });
    }
    let rho = settings.rho;
    let step = &problem.cost * Complex64::new(1.0 / (c_norm * rho), 0.0);
    let mut z = CMatrix::identity(n, n);
    let mut u = CMatrix::zeros(n, n);
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < settings.max_iter {
        iterations += 1;
        let mut x = &z - &u + &step;
        for i in 0..n {
            x[(i, i)] = Complex64::new(1.0, 0.0);
        }
        let z_prev = z;
        z = psd_project(&(&x + &u))?;
        let r = &x - &z;
        u += &r;
        primal = d * r.norm();
        dual = d * rho * (&z - &z_prev).norm();
        if primal <= settings.tol_primal && dual <= settings.tol_dual {
            converged = true;
            break;
        }
    }

    let x = rescale_diagonal(&z, d);
    Ok(SdpSolution {
        objective: trace_product(&problem.cost, &x),
        x,
        iterations,
        converged,
        primal_residual: primal,
        dual_residual: dual,
    })
}

/// `d·S·Z·S` with `S = diag(Z_ii^{-1/2})`; rows of `Z` that vanish get the
/// diagonal entry `d` alone.
fn rescale_diagonal(z: &CMatrix, d: f64) -> CMatrix {
    let n = z.nrows();
    let s: Vec<f64> = (0..n)
        .map(|i| {
            let zii = z[(i, i)].re;
            if zii > 0.0 {
                zii.sqrt().recip()
            } else {
                0.0
            }
        })
        .collect();
    let mut x = CMatrix::from_fn(n, n, |i, j| z[(i, j)] * (d * s[i] * s[j]));
    for i in 0..n {
        x[(i, i)] = Complex64::new(d, 0.0);
    }
    x
}

/// Unit-modulus rounding: `e^{j∠v_i}` for the top eigenvector `v` of `X`;
/// zero entries map to phase 0.
pub fn extract_phases(solution: &SdpSolution) -> Result<CVector> {
    if solution.x.norm() == 0.0 {
        return Err(Error::param("solution", "X is zero"));
    }
    let v = hermitian_eig(&solution.x)?.top_eigenvector();
    Ok(v.map(|z| {
        if z.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            z / z.norm()
        }
    }))
}

/// `Re α^H·C·α`.
pub fn quadratic_objective(cost: &CMatrix, alpha: &CVector) -> f64 {
    alpha.dotc(&(cost * alpha)).re
}

/// Largest candidate count accepted by [`brute_force_phase`].
pub const BRUTE_FORCE_LIMIT: u128 = 100_000_000;

/// Exhaustive maximisation of `α^H·C·α` over `α_i = sqrt(d)·e^{j2πk_i/levels}`
/// with `k_0 = 0` (the objective is invariant to a global phase).
///
/// Requires `L ≤ 8` and at most `1e8` enumerated candidates
/// (`levels^(L−1)`). Ties resolve to the lexicographically smallest phase
/// index vector.
pub fn brute_force_phase(cost: &CMatrix, d: f64, levels: usize) -> Result<(f64, CVector)> {
    let l = cost.nrows();
    if l != cost.ncols() || l == 0 {
        return Err(Error::DimensionMismatch(
            "cost must be square and non-empty".into(),
        ));
    }
    if l > 8 {
        return Err(Error::SearchTooLarge((levels as u128).saturating_pow(l as u32)));
    }
    if levels == 0 {
        return Err(Error::param("levels", "must be at least 1"));
    }
    if !(d > 0.0) {
        return Err(Error::param("d", "must be positive"));
    }
    let total = (levels as u128).pow(l as u32 - 1);
    if total > BRUTE_FORCE_LIMIT {
        return Err(Error::SearchTooLarge(total));
    }
    let table: Vec<Complex64> = (0..levels)
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / levels as f64))
        .collect();
    if l == 1 {
        let obj = d * cost[(0, 0)].re;
        return Ok((obj, CVector::from_element(1, Complex64::new(d.sqrt(), 0.0))));
    }

    // One work item per value of the second phase index.
    let results = Execution::default().map(levels, |k1| {
        let mut digits = vec![0usize; l];
        digits[1] = k1;
        let mut u = CVector::from_iterator(l, digits.iter().map(|&k| table[k]));
        let mut w = cost * &u;
        let mut best = (u.dotc(&w).re, digits.clone());
        loop {
            // Odometer over indices 2..l, updating w = C·u incrementally.
            let mut pos = l - 1;
            loop {
                if pos < 2 {
                    return best;
                }
                let old = table[digits[pos]];
                digits[pos] = (digits[pos] + 1) % levels;
                let new = table[digits[pos]];
                let delta = new - old;
                u[pos] = new;
                w.axpy(delta, &cost.column(pos), Complex64::new(1.0, 0.0));
                if digits[pos] != 0 {
                    break;
                }
                pos -= 1;
            }
            let obj = u.dotc(&w).re;
            if obj > best.0 {
                best = (obj, digits.clone());
            }
        }
    });
    let mut best = results[0].clone();
    for r in &results[1..] {
        if r.0 > best.0 {
            best = r.clone();
        }
    }
    let alpha = CVector::from_iterator(l, best.1.iter().map(|&k| table[k] * d.sqrt()));
    Ok((d * best.0, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_cost_gives_trace() {
        let p = SdpProblem::new(CMatrix::identity(4, 4), 0.5).unwrap();
        let s = solve_sdp(&p, &AdmmSettings::for_problem(4, 0.5)).unwrap();
        assert!(s.converged);
        assert!((s.objective - 2.0).abs() < 1e-6);
    }

    #[test]
    fn rank_one_cost_is_phase_aligned() {
        let h = CVector::from_vec(vec![c(1.0, 0.5), c(-0.3, 0.2), c(0.0, -2.0), c(0.7, 0.7)]);
        let cost = &h * h.adjoint();
        let d = 0.25;
        let p = SdpProblem::new(cost, d).unwrap();
        let s = solve_sdp(&p, &AdmmSettings::for_problem(4, d)).unwrap();
        let sum: f64 = h.iter().map(|z| z.norm()).sum();
        let expected = d * sum * sum;
        assert!(s.converged);
        assert!(
            (s.objective - expected).abs() < 1e-5 * expected,
            "{} vs {}",
            s.objective,
            expected
        );
        for i in 0..4 {
            assert!((s.x[(i, i)].re - d).abs() <= 1e-8 * d);
        }
    }

    #[test]
    fn zero_cost_is_trivially_solved() {
        let s = solve_sdp(
            &SdpProblem::new(CMatrix::zeros(3, 3), 1.0).unwrap(),
            &AdmmSettings::for_problem(3, 1.0),
        )
        .unwrap();
        assert!(s.converged);
        assert_eq!(s.objective, 0.0);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let h = CVector::from_vec(vec![c(1.0, 0.5), c(-0.3, 0.2), c(0.0, -2.0)]);
        let p = SdpProblem::new(&h * h.adjoint(), 1.0).unwrap();
        let mut settings = AdmmSettings::for_problem(3, 1.0);
        settings.max_iter = 2;
        let s = solve_sdp(&p, &settings).unwrap();
        assert!(!s.converged);
        assert_eq!(s.iterations, 2);
    }

    #[test]
    fn problem_validation() {
        let bad = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(SdpProblem::new(bad, 1.0), Err(Error::NotHermitian(_))));
        assert!(SdpProblem::new(CMatrix::identity(2, 2), 0.0).is_err());
    }

    #[test]
    fn extract_rank_one_recovers_phases() {
        let u = CVector::from_vec(vec![c(0.0, 1.0), c(1.0, 0.0), c(-0.6, 0.8)]);
        let x = &u * u.adjoint() * c(2.0, 0.0);
        let sol = SdpSolution {
            x,
            objective: 0.0,
            iterations: 0,
            converged: true,
            primal_residual: 0.0,
            dual_residual: 0.0,
        };
        let v = extract_phases(&sol).unwrap();
        let rot = v[0] / u[0];
        for i in 0..3 {
            assert!((v[i] - u[i] * rot).norm() < 1e-12);
        }
    }

    #[test]
    fn brute_force_small_cases() {
        let one = CMatrix::from_element(1, 1, c(3.0, 0.0));
        assert_eq!(brute_force_phase(&one, 2.0, 8).unwrap().0, 6.0);
        let ones = CMatrix::from_element(2, 2, c(1.0, 0.0));
        let (obj, alpha) = brute_force_phase(&ones, 1.0, 4).unwrap();
        assert!((obj - 4.0).abs() < 1e-12);
        assert!((alpha[1] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn brute_force_rejects_large_instances() {
        let c9 = CMatrix::identity(9, 9);
        assert!(matches!(
            brute_force_phase(&c9, 1.0, 2),
            Err(Error::SearchTooLarge(_))
        ));
        let c8 = CMatrix::identity(8, 8);
        assert!(matches!(
            brute_force_phase(&c8, 1.0, 16),
            Err(Error::SearchTooLarge(_))
        ));
    }
}
