//! Received-signal synthesis, the likelihood-ratio detector, its conditional
//! error probability and Monte Carlo estimation of error rates and
//! exponents.
//!
//! Conditioned on `H` and `α`, the fusion center observes
//! `y = H·α·Θ + H·D(α)·η + ν` with `Θ ∈ {0, θ}`, so `y` is complex Gaussian
//! with a common covariance `R(α)` under both hypotheses.

use num_complex::Complex64;

use crate::allocation::{allocate, GainVector, SchemeChoice};
use crate::model::{
    sample_channel, sample_sensing_noise, ChannelMatrix, ChannelModel, NetworkParams, RandomSource,
    SensingNoiseModel,
};
use crate::numerics::{ln_q_function, q_function, solve_hermitian_pd};
use crate::par::Execution;
use crate::{CMatrix, CVector, Error, Result};

/// Trials per Monte Carlo block; each block owns one random substream.
const MC_BLOCK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    H0,
    H1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedSignal {
    pub y: CVector,
    pub truth: Hypothesis,
}

/// Monte Carlo error-rate estimate with a normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeEstimate {
    pub p_hat: f64,
    pub trials: usize,
    pub errors: usize,
    pub ci95_halfwidth: f64,
}

impl PeEstimate {
    fn from_counts(errors: usize, trials: usize) -> Self {
        let p_hat = errors as f64 / trials as f64;
        Self {
            p_hat,
            trials,
            errors,
            ci95_halfwidth: 1.96 * (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
        }
    }

    pub fn covers(&self, p: f64) -> bool {
        (self.p_hat - p).abs() <= self.ci95_halfwidth
    }
}

fn check_dims(h: &ChannelMatrix, alpha: &GainVector, noise: &SensingNoiseModel) -> Result<()> {
    if alpha.len() != h.num_sensors() {
        return Err(Error::DimensionMismatch(format!(
            "{} gains for {} sensors",
            alpha.len(),
            h.num_sensors()
        )));
    }
    noise.check_dim(h.num_sensors())
}

/// `H·D(α)`: column `l` of `H` scaled by `α_l`.
fn weighted_channel(h: &ChannelMatrix, alpha: &GainVector) -> CMatrix {
    let mut g = h.entries().clone();
    for (l, a) in alpha.values().iter().enumerate() {
        for z in g.column_mut(l).iter_mut() {
            *z *= a;
        }
    }
    g
}

/// Covariance of the received signal,
/// `R(α) = H·D(α)·R_η·D(α)^H·H^H + σ_ν²·I` (`R_η = σ²·I` for iid noise).
///
/// The sensing-noise law comes from `noise`; `params` supplies `σ_ν²`.
pub fn covariance_r(
    h: &ChannelMatrix,
    alpha: &GainVector,
    params: &NetworkParams,
    noise: &SensingNoiseModel,
) -> Result<CMatrix> {
    check_dims(h, alpha, noise)?;
    let g = weighted_channel(h, alpha);
    let mut r = match noise {
        SensingNoiseModel::Iid { variance } => (&g * g.adjoint()) * Complex64::new(*variance, 0.0),
        SensingNoiseModel::Correlated(c) => &g * c.covariance() * g.adjoint(),
    };
    let n = r.nrows();
    for i in 0..n {
        r[(i, i)] += params.sigma_nu_sq();
        r[(i, i)].im = 0.0;
        for j in 0..i {
            let avg = 0.5 * (r[(i, j)] + r[(j, i)].conj());
            r[(i, j)] = avg;
            r[(j, i)] = avg.conj();
        }
    }
    Ok(r)
}

/// `α^H·H^H·R(α)^{-1}·H·α`.
pub fn snr_quadratic_form(
    h: &ChannelMatrix,
    alpha: &GainVector,
    params: &NetworkParams,
    noise: &SensingNoiseModel,
) -> Result<f64> {
    let r = covariance_r(h, alpha, params, noise)?;
    let s = h.entries() * alpha.values();
    let w = solve_hermitian_pd(&r, &s)?;
    Ok(s.dotc(&w).re.max(0.0))
}

/// Likelihood-ratio test for a fixed `(H, α)`, with everything that does not
/// depend on `y` precomputed.
#[derive(Debug, Clone)]
pub struct LrtDetector {
    theta: f64,
    signal: CVector,
    weights: CVector,
    quad: f64,
    threshold: f64,
    mixing: CMatrix,
    noise: SensingNoiseModel,
    sigma_nu_sq: f64,
    p1: f64,
}

impl LrtDetector {
    pub fn new(
        h: &ChannelMatrix,
        alpha: &GainVector,
        params: &NetworkParams,
        noise: &SensingNoiseModel,
    ) -> Result<Self> {
        let r = covariance_r(h, alpha, params, noise)?;
        let signal = h.entries() * alpha.values();
        let weights = solve_hermitian_pd(&r, &signal)?;
        let quad = signal.dotc(&weights).re.max(0.0);
        let theta = params.theta();
        Ok(Self {
            theta,
            threshold: 0.5 * theta * theta * quad + params.tau(),
            signal,
            weights,
            quad,
            mixing: weighted_channel(h, alpha),
            noise: noise.clone(),
            sigma_nu_sq: params.sigma_nu_sq(),
            p1: params.p1(),
        })
    }

    /// `α^H·H^H·R^{-1}·H·α`.
    pub fn quadratic_form(&self) -> f64 {
        self.quad
    }

    /// `ω = θ·sqrt(q/2)`.
    pub fn omega(&self) -> f64 {
        self.theta * (0.5 * self.quad).sqrt()
    }

    /// Decides `H1` iff `Re{θ·y^H·R^{-1}·H·α} ≥ θ²q/2 + τ`.
    pub fn decide(&self, y: &CVector) -> Hypothesis {
        let stat = self.theta * y.dotc(&self.weights).re;
        if stat >= self.threshold {
            Hypothesis::H1
        } else {
            Hypothesis::H0
        }
    }

    pub fn synthesize(&self, hypothesis: Hypothesis, rng: &mut RandomSource) -> Result<ReceivedSignal> {
        let l = self.mixing.ncols();
        let eta = sample_sensing_noise(&self.noise, l, rng)?;
        let mut y = &self.mixing * eta;
        if hypothesis == Hypothesis::H1 {
            y.axpy(
                Complex64::new(self.theta, 0.0),
                &self.signal,
                Complex64::new(1.0, 0.0),
            );
        }
        for z in y.iter_mut() {
            *z += rng.complex_normal(self.sigma_nu_sq);
        }
        Ok(ReceivedSignal { y, truth: hypothesis })
    }

    /// Draws the hypothesis from the prior, synthesises and decides; returns
    /// whether the decision was wrong.
    fn trial(&self, rng: &mut RandomSource) -> Result<bool> {
        let truth = if rng.uniform() < self.p1 {
            Hypothesis::H1
        } else {
            Hypothesis::H0
        };
        let signal = self.synthesize(truth, rng)?;
        Ok(self.decide(&signal.y) != truth)
    }
}

/// Draws `y` under `hypothesis`.
pub fn synthesize(
    h: &ChannelMatrix,
    alpha: &GainVector,
    params: &NetworkParams,
    noise: &SensingNoiseModel,
    hypothesis: Hypothesis,
    rng: &mut RandomSource,
) -> Result<ReceivedSignal> {
    LrtDetector::new(h, alpha, params, noise)?.synthesize(hypothesis, rng)
}

/// Bayesian likelihood-ratio decision for one observation.
pub fn decide(
    y: &CVector,
    h: &ChannelMatrix,
    alpha: &GainVector,
    params: &NetworkParams,
    noise: &SensingNoiseModel,
) -> Result<Hypothesis> {
    if y.len() != h.num_antennas() {
        return Err(Error::DimensionMismatch(format!(
            "observation has length {}, expected {}",
            y.len(),
            h.num_antennas()
        )));
    }
    Ok(LrtDetector::new(h, alpha, params, noise)?.decide(y))
}

/// `p0·Q(ω + τ/ω) + p1·Q(ω − τ/ω)` given `ω`.
pub fn pe_from_omega(omega: f64, params: &NetworkParams) -> f64 {
    let tau = params.tau();
    if omega == 0.0 {
        return if tau < 0.0 {
            params.p0()
        } else if tau > 0.0 {
            params.p1()
        } else {
            0.5
        };
    }
    params.p0() * q_function(omega + tau / omega) + params.p1() * q_function(omega - tau / omega)
}

/// `ln Pe` given `ω`, finite even when `Pe` underflows.
pub fn ln_pe_from_omega(omega: f64, params: &NetworkParams) -> f64 {
    if omega == 0.0 {
        return pe_from_omega(0.0, params).ln();
    }
    let tau = params.tau();
    let a = params.p0().ln() + ln_q_function(omega + tau / omega);
    let b = params.p1().ln() + ln_q_function(omega - tau / omega);
    let hi = a.max(b);
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

/// Error probability of the Bayesian detector conditioned on the channel.
pub fn pe_conditional(
    h: &ChannelMatrix,
    alpha: &GainVector,
    params: &NetworkParams,
    noise: &SensingNoiseModel,
) -> Result<f64> {
    let q = snr_quadratic_form(h, alpha, params, noise)?;
    Ok(pe_from_omega(params.theta() * (0.5 * q).sqrt(), params))
}

/// `ln` of [`pe_conditional`].
pub fn ln_pe_conditional(
    h: &ChannelMatrix,
    alpha: &GainVector,
    params: &NetworkParams,
    noise: &SensingNoiseModel,
) -> Result<f64> {
    let q = snr_quadratic_form(h, alpha, params, noise)?;
    Ok(ln_pe_from_omega(params.theta() * (0.5 * q).sqrt(), params))
}

/// Monte Carlo error rate of the detector on a fixed channel.
pub fn estimate_pe_montecarlo(
    h: &ChannelMatrix,
    alpha: &GainVector,
    params: &NetworkParams,
    noise: &SensingNoiseModel,
    trials: usize,
    rng: &RandomSource,
) -> Result<PeEstimate> {
    estimate_pe_montecarlo_with(h, alpha, params, noise, trials, rng, Execution::default())
}

/// [`estimate_pe_montecarlo`] with an explicit execution strategy. Trials
/// are grouped in fixed blocks, each drawing from `rng.substream(block)`, so
/// the estimate is the same for every strategy and thread count.
pub fn estimate_pe_montecarlo_with(
    h: &ChannelMatrix,
    alpha: &GainVector,
    params: &NetworkParams,
    noise: &SensingNoiseModel,
    trials: usize,
    rng: &RandomSource,
    exec: Execution,
) -> Result<PeEstimate> {
    if trials < 1000 {
        return Err(Error::param(
            "trials",
            format!("need at least 1000, got {trials}"),
        ));
    }
    let detector = LrtDetector::new(h, alpha, params, noise)?;
    let blocks = trials.div_ceil(MC_BLOCK);
    let counts = exec.try_map(blocks, |b| -> Result<usize> {
        let mut stream = rng.substream(b as u64);
        let n = MC_BLOCK.min(trials - b * MC_BLOCK);
        let mut errors = 0;
        for _ in 0..n {
            if detector.trial(&mut stream)? {
                errors += 1;
            }
        }
        Ok(errors)
    })?;
    Ok(PeEstimate::from_counts(counts.iter().sum(), trials))
}

/// Finite-L error exponents `−(1/L)·ln Pe` averaged over channel draws.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentCurve {
    pub sensors: Vec<usize>,
    pub exponents: Vec<f64>,
    /// Mean of the two largest-L points.
    pub plateau: f64,
}

impl ExponentCurve {
    /// Largest relative deviation from the plateau among points with
    /// `L ≥ from`.
    pub fn flatness_from(&self, from: usize) -> f64 {
        self.sensors
            .iter()
            .zip(&self.exponents)
            .filter(|(l, _)| **l >= from)
            .map(|(_, e)| (e / self.plateau - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Empirical exponent `−(1/L)·ln Pe|H` over a grid of network sizes.
///
/// Draw `d` uses `rng.substream(d)` for an `N x max(L)` channel, and each
/// grid point uses its leading `L` sensors (common random numbers), so the
/// curve is a smooth function of `L`. `ln Pe` is evaluated in the log
/// domain and does not underflow.
pub fn empirical_exponent(
    params: &NetworkParams,
    model: ChannelModel,
    scheme: &SchemeChoice,
    sensor_grid: &[usize],
    draws: usize,
    rng: &RandomSource,
    exec: Execution,
) -> Result<ExponentCurve> {
    if sensor_grid.len() < 4 {
        return Err(Error::param("sensor_grid", "need at least 4 points"));
    }
    if sensor_grid.windows(2).any(|w| w[0] >= w[1]) || sensor_grid[0] == 0 {
        return Err(Error::param(
            "sensor_grid",
            "must be positive and strictly increasing",
        ));
    }
    let l_max = *sensor_grid.last().expect("non-empty");
    if l_max < 200 {
        return Err(Error::param("sensor_grid", "largest point must be at least 200"));
    }
    if draws == 0 {
        return Err(Error::param("draws", "must be at least 1"));
    }
    let noise = SensingNoiseModel::from_params(params);
    let per_draw = exec.try_map(draws, |d| -> Result<Vec<f64>> {
        let full = sample_channel(model, params.num_antennas(), l_max, &mut rng.substream(d as u64))?;
        sensor_grid
            .iter()
            .map(|&l| {
                let h = full.leading_sensors(l)?;
                let p = params.with_sensors(l)?;
                let alpha = allocate(scheme, &h, &p)?;
                Ok(-ln_pe_conditional(&h, &alpha, &p, &noise)? / l as f64)
            })
            .collect()
    })?;
    let exponents: Vec<f64> = (0..sensor_grid.len())
        .map(|i| per_draw.iter().map(|v| v[i]).sum::<f64>() / draws as f64)
        .collect();
    let k = exponents.len();
    Ok(ExponentCurve {
        sensors: sensor_grid.to_vec(),
        plateau: 0.5 * (exponents[k - 1] + exponents[k - 2]),
        exponents,
    })
}

/// `E_H[Pe|H]` over `draws` channel realisations of `params.num_sensors()`
/// sensors.
pub fn mean_pe_over_channels(
    params: &NetworkParams,
    model: ChannelModel,
    scheme: &SchemeChoice,
    draws: usize,
    rng: &RandomSource,
    exec: Execution,
) -> Result<f64> {
    if draws == 0 {
        return Err(Error::param("draws", "must be at least 1"));
    }
    let noise = SensingNoiseModel::from_params(params);
    let pes = exec.try_map(draws, |d| -> Result<f64> {
        let h = sample_channel(
            model,
            params.num_antennas(),
            params.num_sensors(),
            &mut rng.substream(d as u64),
        )?;
        let alpha = allocate(scheme, &h, params)?;
        pe_conditional(&h, &alpha, params, &noise)
    })?;
    Ok(pes.iter().sum::<f64>() / draws as f64)
}
