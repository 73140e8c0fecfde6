//! Dense complex linear algebra and special functions.

mod eig;
mod linalg;
mod quad;
mod special;

pub use eig::{canonical_phase, hermitian_eig, HermitianEig};
pub use linalg::{hermitian_asymmetry, psd_project, solve_hermitian_pd};
pub use quad::{integrate, integrate_with_breaks};
pub use special::{bessel_i0_scaled, exp_integral_e1, exp_scaled_e1, ln_q_function, q_function, EULER_GAMMA};
