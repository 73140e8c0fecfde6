//! Distributed detection over fading multiple-access channels with a
//! multi-antenna fusion center.
//!
//! Sensors observe a common binary event, amplify their noisy observations
//! with complex gains `alpha` and transmit simultaneously to an `N`-antenna
//! fusion center over a fading channel `H` (N x L). The crate provides
//!
//! * closed-form error exponents, antenna gains and their bounds ([`exponents`]),
//! * sensor-gain allocation strategies and the finite-L exponent statistic
//!   ([`allocation`]),
//! * an ADMM solver for the fixed-diagonal semidefinite relaxation of the
//!   phase-only design ([`sdr`]),
//! * the likelihood-ratio detector, its conditional error probability and a
//!   Monte Carlo simulator ([`detection`]),
//! * the dense complex linear algebra and special functions they rest on
//!   ([`numerics`]).
//!
//! Monte Carlo loops run on rayon when the `parallel` feature is enabled
//! (default). Every random draw comes from a counter-based [`RandomSource`]
//! stream keyed by trial index, so results do not depend on the number of
//! worker threads.

// Validation uses `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod detection;
mod error;
pub mod exponents;
pub mod model;
pub mod numerics;
pub mod par;
pub mod sdr;

pub use error::{Error, Result};
pub use model::{ChannelMatrix, ChannelModel, NetworkParams, RandomSource, SensingNoiseModel};
pub use par::Execution;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = nalgebra::DMatrix<num_complex::Complex64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<num_complex::Complex64>;

pub use num_complex::Complex64;

/// `10·log10(x)`, the convention for SNR inputs.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Inverse of [`to_db`].
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `20·log10(ratio)`, the convention used when reporting exponent-ratio gains.
pub fn gain_db(ratio: f64) -> f64 {
    20.0 * ratio.log10()
}
