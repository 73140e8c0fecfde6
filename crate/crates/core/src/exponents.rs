//! Closed-form error exponents, antenna gains, their bounds and the
//! large-system scaling laws.
//!
//! All exponents use the `θ²/8` normalisation of the large-L exponent
//! statistic. Gains are ratios of exponents and therefore independent of
//! that constant. The Neyman–Pearson exponent is [`NEYMAN_PEARSON_FACTOR`]
//! times the Bayesian one.

use crate::model::{mean_abs_h, ChannelModel, NetworkParams, SensingNoiseModel};
use crate::numerics::{exp_scaled_e1, integrate_with_breaks};
use crate::{Error, Result};

/// Ratio of the Neyman–Pearson exponent to the Bayesian exponent.
pub const NEYMAN_PEARSON_FACTOR: f64 = 4.0;

/// Operating point for the scalar formulas.
///
/// `gamma_s` may be `+inf` (no sensing noise); `k` may be `+inf` (AWGN).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPoint {
    pub gamma_s: f64,
    pub gamma_c: f64,
    pub p1: f64,
    pub k: f64,
    pub n: usize,
}

impl SnrPoint {
    pub fn new(gamma_s: f64, gamma_c: f64, p1: f64, k: f64, n: usize) -> Result<Self> {
        if !(gamma_s > 0.0) {
            return Err(Error::param(
                "gamma_s",
                format!("must be positive, got {gamma_s}"),
            ));
        }
        if !(gamma_c > 0.0 && gamma_c.is_finite()) {
            return Err(Error::param(
                "gamma_c",
                format!("must be positive, got {gamma_c}"),
            ));
        }
        if !(p1 > 0.0 && p1 < 1.0) {
            return Err(Error::param("p1", format!("must lie in (0, 1), got {p1}")));
        }
        if !(k >= 0.0) {
            return Err(Error::param("K", format!("must be non-negative, got {k}")));
        }
        if n == 0 {
            return Err(Error::param("N", "must be at least 1"));
        }
        Ok(Self {
            gamma_s,
            gamma_c,
            p1,
            k,
            n,
        })
    }

    pub fn from_params(params: &NetworkParams, model: &ChannelModel) -> Self {
        Self {
            gamma_s: params.gamma_s(),
            gamma_c: params.gamma_c(),
            p1: params.p1(),
            k: model.k_factor(),
            n: params.num_antennas(),
        }
    }

    pub fn with_n(self, n: usize) -> Self {
        Self { n, ..self }
    }

    pub fn with_k(self, k: f64) -> Self {
        Self { k, ..self }
    }

    pub fn with_gamma_s(self, gamma_s: f64) -> Self {
        Self { gamma_s, ..self }
    }

    pub fn with_gamma_c(self, gamma_c: f64) -> Self {
        Self { gamma_c, ..self }
    }

    /// `z = γ_c/(p1·γ_s + 1)`; zero when `γ_s = +inf`.
    pub fn z(&self) -> f64 {
        z_factor(self.gamma_c, self.p1, self.gamma_s)
    }
}

fn z_factor(gamma_c: f64, p1: f64, gamma_s: f64) -> f64 {
    gamma_c / (p1 * gamma_s + 1.0)
}

/// Phase-only penalty `ζ = (E|h|)^{-2} ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ZetaFactor(f64);

impl ZetaFactor {
    pub fn new(zeta: f64) -> Result<Self> {
        if zeta >= 1.0 && zeta.is_finite() {
            Ok(Self(zeta))
        } else {
            Err(Error::param(
                "zeta",
                format!("must be finite and >= 1, got {zeta}"),
            ))
        }
    }

    pub fn from_model(model: &ChannelModel) -> Self {
        let m = mean_abs_h(model);
        Self((1.0 / (m * m)).max(1.0))
    }

    /// `4/π`.
    pub fn rayleigh() -> Self {
        Self(4.0 / std::f64::consts::PI)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Exponent with AWGN channels:
/// `N·γ_s·γ_c / (8·(N·γ_c + p1·γ_s + 1))`, tending to `N·γ_c/(8·p1)` as
/// `γ_s → ∞`.
pub fn e_awgn(pt: &SnrPoint) -> f64 {
    let n = pt.n as f64;
    if pt.gamma_s.is_infinite() {
        return n * pt.gamma_c / (8.0 * pt.p1);
    }
    n * pt.gamma_s * pt.gamma_c / (8.0 * (n * pt.gamma_c + pt.p1 * pt.gamma_s + 1.0))
}

/// `E_AWGN(N)/E_AWGN(1)`.
pub fn gain_awgn(pt: &SnrPoint) -> f64 {
    let n = pt.n as f64;
    if pt.gamma_s.is_infinite() {
        return n;
    }
    let a = pt.p1 * pt.gamma_s + 1.0;
    n * (pt.gamma_c + a) / (n * pt.gamma_c + a)
}

/// Exponent of uniform gains (no channel knowledge at the sensors) over
/// Ricean-K fading. Identically zero for `K = 0`.
pub fn e_nocsis(pt: &SnrPoint) -> f64 {
    if pt.k.is_infinite() {
        return e_awgn(pt);
    }
    let n = pt.n as f64;
    let k = pt.k;
    if pt.gamma_s.is_infinite() {
        return n * k * pt.gamma_c / (8.0 * pt.p1 * (k + 1.0));
    }
    n * k * pt.gamma_s * pt.gamma_c
        / (8.0 * (pt.gamma_c * (n * k + 1.0) + (pt.p1 * pt.gamma_s + 1.0) * (k + 1.0)))
}

/// `E_NoCSIS(N, K)/E_NoCSIS(1, K)`, written without the removable `K = 0`
/// singularity.
pub fn gain_nocsis(pt: &SnrPoint) -> f64 {
    if pt.k.is_infinite() {
        return gain_awgn(pt);
    }
    let n = pt.n as f64;
    let k = pt.k;
    if pt.gamma_s.is_infinite() {
        return n;
    }
    let a = pt.p1 * pt.gamma_s + 1.0;
    n * (k + 1.0) * (pt.gamma_c + a) / (pt.gamma_c * (n * k + 1.0) + a * (k + 1.0))
}

/// Optimal single-antenna exponent with full channel knowledge,
/// `(θ²/8)·E[1/(σ_η² + σ_ν²/(P|h|²))]`, by adaptive quadrature over the
/// amplitude density (split at the knee `|h|² = σ_ν²/(Pσ_η²)`).
pub fn e_csis1_numeric(params: &NetworkParams, model: &ChannelModel) -> f64 {
    let theta_sq = params.theta() * params.theta();
    let p = params.power();
    let se = params.sigma_eta_sq();
    let sn = params.sigma_nu_sq();
    // θ²·P·x / (8(σ_η²·P·x + σ_ν²)) with x = |h|², finite at x = 0.
    let per_gain = |x: f64| theta_sq * p * x / (8.0 * (se * p * x + sn));
    if let ChannelModel::Awgn = model {
        return per_gain(1.0);
    }
    let upper = model.amplitude_cutoff();
    let mut breaks = vec![0.0];
    if se > 0.0 {
        let knee = (sn / (p * se)).sqrt();
        if knee < upper {
            breaks.push(knee);
        }
    }
    breaks.push(upper);
    integrate_with_breaks(|r| per_gain(r * r) * model.amplitude_density(r), &breaks, 1e-12)
}

/// The Rayleigh closed form as commonly printed:
/// `(γ_s/32)·[2 − a·e^{a/2}·E1(a/2)]` with `a = (p1·γ_s + 1)/γ_c`.
///
/// For unit-power Rayleigh fading the expectation in [`e_csis1_numeric`]
/// evaluates to `(γ_s/8)·[1 − a·e^a·E1(a)]`; the printed form equals half of
/// that expression at `2·γ_c`. Both are kept, see
/// [`e_csis1_rayleigh_exact`].
pub fn e_csis1_rayleigh_closed(pt: &SnrPoint) -> f64 {
    if pt.gamma_s.is_infinite() {
        return pt.gamma_c / (8.0 * pt.p1);
    }
    let a = (pt.p1 * pt.gamma_s + 1.0) / pt.gamma_c;
    let scaled = exp_scaled_e1(0.5 * a).expect("a > 0");
    pt.gamma_s / 32.0 * (2.0 - a * scaled)
}

/// `(γ_s/8)·[1 − a·e^a·E1(a)]`, the exact value of the single-antenna
/// optimum for `E|h|² = 1` Rayleigh fading.
pub fn e_csis1_rayleigh_exact(pt: &SnrPoint) -> f64 {
    if pt.gamma_s.is_infinite() {
        return pt.gamma_c / (8.0 * pt.p1);
    }
    let a = (pt.p1 * pt.gamma_s + 1.0) / pt.gamma_c;
    let scaled = exp_scaled_e1(a).expect("a > 0");
    pt.gamma_s / 8.0 * (1.0 - a * scaled)
}

/// Phase-only single-antenna exponent `E_AWGN(1)/ζ`.
pub fn e_po1(pt: &SnrPoint, zeta: ZetaFactor) -> f64 {
    e_awgn(&pt.with_n(1)) / zeta.value()
}

/// Noise-free-sensing upper bound `(γ_c/(8·p1))·(NK+1)/(K+1)`.
pub fn bound_b(pt: &SnrPoint) -> f64 {
    let n = pt.n as f64;
    let base = pt.gamma_c / (8.0 * pt.p1);
    if pt.k.is_infinite() {
        return base * n;
    }
    base * (n * pt.k + 1.0) / (pt.k + 1.0)
}

/// Combined upper bound `min(E_AWGN(N), B(N, K))`.
///
/// The branch is chosen by the direct minimum; the `σ_η²` threshold form of
/// this bound only holds under a unit noise normalisation.
pub fn bound_c(pt: &SnrPoint) -> f64 {
    e_awgn(pt).min(bound_b(pt))
}

/// Upper bound on the full-CSIS antenna gain at a given operating point.
pub fn gain_csis_bound(pt: &SnrPoint, zeta: ZetaFactor) -> f64 {
    gain_csis_bound_z(pt.z(), pt.n, pt.k, zeta)
}

/// [`gain_csis_bound`] for an explicit `z` (e.g. the correlated-noise
/// `z̃` from [`corr_noise_z`]).
pub fn gain_csis_bound_z(z: f64, n: usize, k: f64, zeta: ZetaFactor) -> f64 {
    let nf = n as f64;
    let awgn = nf * (z + 1.0) / (nf * z + 1.0);
    let no_sensing = if k.is_infinite() {
        (z + 1.0) * nf
    } else {
        (z + 1.0) * (nf * k + 1.0) / (k + 1.0)
    };
    zeta.value() * awgn.min(no_sensing)
}

/// Maximum of [`gain_csis_bound_z`] over `z`:
/// `ζ·(N²K + 2N − 1)/(N(K+1))`.
pub fn gain_csis_bound_nk(n: usize, k: f64, zeta: ZetaFactor) -> f64 {
    let nf = n as f64;
    zeta.value() * (nf * nf * k + 2.0 * nf - 1.0) / (nf * (k + 1.0))
}

/// `lim_{N→∞}` of [`gain_csis_bound_nk`]: `2ζ` for Rayleigh fading,
/// unbounded for `K > 0`.
pub fn gain_csis_bound_limit(k: f64, zeta: ZetaFactor) -> f64 {
    if k > 0.0 {
        f64::INFINITY
    } else {
        2.0 * zeta.value()
    }
}

/// Maximiser `z* = (N−1)/(N(NK+1))` of [`gain_csis_bound_z`].
pub fn gain_csis_argmax_z(n: usize, k: f64) -> f64 {
    let nf = n as f64;
    (nf - 1.0) / (nf * (nf * k + 1.0))
}

/// `z̃ = γ_c/(p1·γ̃_s + 1)` with `γ̃_s = θ²/λ_min(R_η)`.
pub fn corr_noise_z(params: &NetworkParams, noise: &SensingNoiseModel) -> Result<f64> {
    let gamma_s = corr_noise_gamma_s(params, noise)?;
    Ok(z_factor(params.gamma_c(), params.p1(), gamma_s))
}

/// Effective sensing SNR `θ²/λ_min(R_η)`.
pub fn corr_noise_gamma_s(params: &NetworkParams, noise: &SensingNoiseModel) -> Result<f64> {
    let lambda_min = noise.lambda_min();
    if !(lambda_min > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(params.theta() * params.theta() / lambda_min)
}

/// Gain budget with `λ_min(R_η)` in place of `σ_η²`.
pub fn corr_noise_power(params: &NetworkParams, noise: &SensingNoiseModel) -> Result<f64> {
    let lambda_min = noise.lambda_min();
    if !(lambda_min > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(params.total_power() / (params.p1() * params.theta() * params.theta() + lambda_min))
}

/// `(1 + √β)²/β`: the limiting largest eigenvalue of `(1/L)·H^H·H` for
/// zero-mean iid `H` with `L/N → β` (equal to that of `(1/N)·H^H·H` at
/// `β = 1`).
pub fn mp_lambda_max(beta: f64) -> f64 {
    (1.0 + beta.sqrt()).powi(2) / beta
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticBounds {
    pub e_awgn_inf: f64,
    pub b_inf: f64,
    pub c_inf: f64,
}

/// Exponent bounds when `L, N → ∞` with `L/N → β`. The noise-free-sensing
/// bound is infinite for `K > 0`.
pub fn bounds_asymptotic(beta: f64, pt: &SnrPoint) -> AsymptoticBounds {
    let e_awgn_inf = pt.gamma_s / 8.0;
    let b_inf = if pt.k > 0.0 {
        f64::INFINITY
    } else {
        pt.gamma_c / (8.0 * pt.p1) * mp_lambda_max(beta)
    };
    AsymptoticBounds {
        e_awgn_inf,
        b_inf,
        c_inf: e_awgn_inf.min(b_inf),
    }
}

/// Large-system antenna-gain bound `ζ·(1 + (1+√β)²/β)`.
pub fn gain_inf_bound(beta: f64, zeta: ZetaFactor) -> f64 {
    zeta.value() * (1.0 + mp_lambda_max(beta))
}
