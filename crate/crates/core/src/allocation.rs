//! Sensor-gain allocation strategies and the finite-L exponent statistic.
//!
//! Gains are computed centrally from the full channel and are assumed to
//! reach the sensors without feedback error.

use std::collections::HashMap;
use std::sync::Mutex;

use num_complex::Complex64;

use crate::detection::snr_quadratic_form;
use crate::model::{sample_channel, ChannelModel, NetworkParams, RandomSource, SensingNoiseModel};
use crate::numerics::{canonical_phase, hermitian_eig};
use crate::par::Execution;
use crate::sdr::{extract_phases, solve_sdp, AdmmSettings, SdpProblem, SdpSolution};
use crate::{from_db, CMatrix, CVector, ChannelMatrix, Error, Result};

/// Relative slack allowed on the power constraint.
const POWER_SLACK: f64 = 1e-9;

/// Complex sensor gains `α` together with the budget they were designed for.
#[derive(Debug, Clone, PartialEq)]
pub struct GainVector {
    values: CVector,
    budget: f64,
}

impl GainVector {
    pub fn new(values: CVector, budget: f64) -> Result<Self> {
        if !(budget > 0.0 && budget.is_finite()) {
            return Err(Error::param("budget", format!("must be positive, got {budget}")));
        }
        if values.is_empty() {
            return Err(Error::param("values", "need at least one sensor"));
        }
        let power = values.norm_squared();
        if !power.is_finite() || power > budget * (1.0 + POWER_SLACK) {
            return Err(Error::param(
                "values",
                format!("power {power} exceeds budget {budget}"),
            ));
        }
        Ok(Self { values, budget })
    }

    /// Rescales a nonzero direction so that `Σ|α_i|² = budget`.
    pub fn with_full_power(direction: CVector, budget: f64) -> Result<Self> {
        let norm = direction.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroChannel);
        }
        Self::new(direction * Complex64::new(budget.sqrt() / norm, 0.0), budget)
    }

    pub fn zeros(len: usize, budget: f64) -> Self {
        Self {
            values: CVector::zeros(len),
            budget,
        }
    }

    pub fn values(&self) -> &CVector {
        &self.values
    }
    pub fn budget(&self) -> f64 {
        self.budget
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Σ|α_i|²`.
    pub fn power(&self) -> f64 {
        self.values.norm_squared()
    }

    /// `c·α` for `0 ≤ c ≤ 1`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::param("c", format!("must lie in [0, 1], got {c}")));
        }
        Ok(Self {
            values: &self.values * Complex64::new(c, 0.0),
            budget: self.budget,
        })
    }
}

/// The two realisable multi-antenna schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Optimal single-antenna gains for the best antenna.
    MethodI,
    /// Top eigenvector of `H^H·H`.
    MethodII,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeChoice {
    Uniform,
    OptSingle,
    PhaseOnlyN1,
    MethodI,
    MethodII,
    /// Method I below the sensing-SNR crossover (linear scale), Method II
    /// at and above it.
    Hybrid {
        gamma_s_crossover: f64,
    },
    SdrPhase,
}

impl SchemeChoice {
    pub fn hybrid(gamma_s_crossover: f64) -> Result<Self> {
        if !gamma_s_crossover.is_finite() {
            return Err(Error::param("gamma_s_crossover", "must be finite"));
        }
        Ok(SchemeChoice::Hybrid { gamma_s_crossover })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SchemeChoice::Uniform => "uniform",
            SchemeChoice::OptSingle => "opt-single",
            SchemeChoice::PhaseOnlyN1 => "phase-only",
            SchemeChoice::MethodI => "method1",
            SchemeChoice::MethodII => "method2",
            SchemeChoice::Hybrid { .. } => "hybrid",
            SchemeChoice::SdrPhase => "sdr",
        }
    }
}

/// `(θ²/(8L))·α^H·H^H·R(α)^{-1}·H·α`, the finite-L exponent statistic.
pub fn finite_exponent(
    h: &ChannelMatrix,
    alpha: &GainVector,
    params: &NetworkParams,
    noise: &SensingNoiseModel,
) -> Result<f64> {
    let q = snr_quadratic_form(h, alpha, params, noise)?;
    let theta = params.theta();
    Ok(theta * theta * q / (8.0 * h.num_sensors() as f64))
}

/// Equal gains `sqrt(P/L)`.
pub fn alpha_uniform(params: &NetworkParams) -> GainVector {
    let l = params.num_sensors();
    let p = params.power();
    GainVector {
        values: CVector::from_element(l, Complex64::new((p / l as f64).sqrt(), 0.0)),
        budget: p,
    }
}

fn unit_conjugate_phase(h: Complex64) -> Complex64 {
    if h.norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        h.conj() / h.norm()
    }
}

/// Optimal single-antenna gains: magnitudes `∝ |h_i|/(σ_η²P|h_i|² + σ_ν²)`
/// and phases cancelling the channel phases.
pub fn alpha_opt_n1(h_row: &[Complex64], params: &NetworkParams) -> Result<GainVector> {
    let p = params.power();
    let (se, sn) = (params.sigma_eta_sq(), params.sigma_nu_sq());
    let direction = CVector::from_iterator(
        h_row.len(),
        h_row.iter().map(|h| {
            let a = h.norm();
            unit_conjugate_phase(*h) * (a / (se * p * a * a + sn))
        }),
    );
    if direction.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Err(Error::ZeroChannel);
    }
    GainVector::with_full_power(direction, p)
}

/// Phase-only correction: `sqrt(P/L)·e^{−j∠h_i}` (zero channels keep
/// phase 0).
pub fn alpha_phase_only_n1(h_row: &[Complex64], params: &NetworkParams) -> GainVector {
    let p = params.power();
    let amp = (p / h_row.len() as f64).sqrt();
    GainVector {
        values: CVector::from_iterator(h_row.len(), h_row.iter().map(|h| unit_conjugate_phase(*h) * amp)),
        budget: p,
    }
}

/// Per-antenna score `(θ²/8L)·Σ_l 1/(σ_η² + σ_ν²/(P|h_nl|²))`, the exponent
/// the optimal single-antenna gains would achieve at antenna `n`.
pub fn method1_scores(h: &ChannelMatrix, params: &NetworkParams) -> Vec<f64> {
    let p = params.power();
    let (se, sn) = (params.sigma_eta_sq(), params.sigma_nu_sq());
    let theta = params.theta();
    let scale = theta * theta / (8.0 * h.num_sensors() as f64);
    (0..h.num_antennas())
        .map(|n| {
            let sum: f64 = h
                .entries()
                .row(n)
                .iter()
                .map(|z| {
                    let g = p * z.norm_sqr();
                    g / (se * g + sn)
                })
                .sum();
            scale * sum
        })
        .collect()
}

/// Method I: optimal single-antenna gains for the antenna with the best
/// score; ties go to the lowest index.
pub fn method1(h: &ChannelMatrix, params: &NetworkParams) -> Result<(GainVector, usize)> {
    let scores = method1_scores(h, params);
    let mut best = 0;
    for (n, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = n;
        }
    }
    Ok((alpha_opt_n1(&h.row(best), params)?, best))
}

/// Unit top eigenvector of `H^H·H`, through the `N x N` Gram matrix when
/// `N < L`.
fn top_right_singular_vector(h: &ChannelMatrix) -> Result<CVector> {
    let m = h.entries();
    let mut v = if m.nrows() < m.ncols() {
        let gram: CMatrix = m * m.adjoint();
        let u = hermitian_eig(&gram)?.top_eigenvector();
        m.adjoint() * u
    } else {
        let gram: CMatrix = m.adjoint() * m;
        hermitian_eig(&gram)?.top_eigenvector()
    };
    let norm = v.norm();
    if norm == 0.0 {
        return Err(Error::ZeroChannel);
    }
    v /= Complex64::new(norm, 0.0);
    canonical_phase(&mut v);
    Ok(v)
}

/// Method II: `sqrt(P)` times the top eigenvector of `H^H·H`, i.e. the
/// optimum when sensing is noise-free.
pub fn method2(h: &ChannelMatrix, params: &NetworkParams) -> Result<GainVector> {
    GainVector::with_full_power(top_right_singular_vector(h)?, params.power())
}

/// Method I below `crossover_gamma_s` (linear sensing SNR), Method II at or
/// above it.
pub fn hybrid(h: &ChannelMatrix, params: &NetworkParams, crossover_gamma_s: f64) -> Result<GainVector> {
    if params.gamma_s() < crossover_gamma_s {
        Ok(method1(h, params)?.0)
    } else {
        method2(h, params)
    }
}

/// Gains and solver record of the semidefinite-relaxation design.
#[derive(Debug, Clone)]
pub struct SdrAllocation {
    pub alpha: GainVector,
    pub solution: SdpSolution,
}

/// Phase-only design through the semidefinite relaxation
/// `max tr(H^H·H·X)` s.t. `X ⪰ 0`, `X_ii = P/L`, rounded by the phases of
/// the top eigenvector of `X`. Fails with [`Error::NotConverged`] when the
/// solver stops at its iteration limit.
pub fn alpha_sdr_phase(
    h: &ChannelMatrix,
    params: &NetworkParams,
    settings: &AdmmSettings,
) -> Result<SdrAllocation> {
    let l = h.num_sensors();
    let p = params.power();
    let d = p / l as f64;
    let cost: CMatrix = h.entries().adjoint() * h.entries();
    let problem = SdpProblem::new(cost, d)?;
    let solution = solve_sdp(&problem, settings)?;
    if !solution.converged {
        return Err(Error::NotConverged {
            iterations: solution.iterations,
        });
    }
    let phases = extract_phases(&solution)?;
    let alpha = GainVector::with_full_power(phases, p)?;
    Ok(SdrAllocation { alpha, solution })
}

/// Gains of `scheme` for channel `h`; the number of sensors is taken from
/// `h`. Single-antenna schemes use the first antenna's row.
pub fn allocate(scheme: &SchemeChoice, h: &ChannelMatrix, params: &NetworkParams) -> Result<GainVector> {
    let params = params.with_sensors(h.num_sensors())?;
    match *scheme {
        SchemeChoice::Uniform => Ok(alpha_uniform(&params)),
        SchemeChoice::OptSingle => alpha_opt_n1(&h.row(0), &params),
        SchemeChoice::PhaseOnlyN1 => Ok(alpha_phase_only_n1(&h.row(0), &params)),
        SchemeChoice::MethodI => Ok(method1(h, &params)?.0),
        SchemeChoice::MethodII => method2(h, &params),
        SchemeChoice::Hybrid { gamma_s_crossover } => hybrid(h, &params, gamma_s_crossover),
        SchemeChoice::SdrPhase => Ok(alpha_sdr_phase(
            h,
            &params,
            &AdmmSettings::for_problem(h.num_sensors(), params.power() / h.num_sensors() as f64),
        )?
        .alpha),
    }
}

/// Operating point and grid for locating the Method I / Method II crossover.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverSearch {
    pub num_sensors: usize,
    pub num_antennas: usize,
    pub gamma_c: f64,
    pub p1: f64,
    /// Sensing SNRs in dB, strictly increasing; `+inf` means noise-free
    /// sensing.
    pub gamma_s_db_grid: Vec<f64>,
}

impl CrossoverSearch {
    fn validate(&self) -> Result<()> {
        if self.gamma_s_db_grid.is_empty() {
            return Err(Error::param("gamma_s_db_grid", "must not be empty"));
        }
        if self.gamma_s_db_grid.iter().any(|x| x.is_nan())
            || self.gamma_s_db_grid.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::param("gamma_s_db_grid", "must be strictly increasing"));
        }
        NetworkParams::from_snr(self.num_sensors, self.num_antennas, 1.0, self.gamma_c, self.p1)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrossoverOutcome {
    /// Mean exponents cross at `gamma_s_db`; `below` wins at lower sensing
    /// SNR.
    Crossover { gamma_s_db: f64, below: Method },
    /// One method is at least as good over the whole grid.
    NoCrossover { dominant: Method },
}

impl CrossoverOutcome {
    /// Crossover in linear sensing SNR, for [`SchemeChoice::Hybrid`].
    pub fn gamma_s(&self) -> Option<f64> {
        match self {
            CrossoverOutcome::Crossover { gamma_s_db, .. } => Some(from_db(*gamma_s_db)),
            CrossoverOutcome::NoCrossover { .. } => None,
        }
    }
}

/// Result of [`calibrate_crossover`], including the grid means it was
/// located from.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverCalibration {
    pub outcome: CrossoverOutcome,
    pub gamma_s_db: Vec<f64>,
    pub mean_method1: Vec<f64>,
    pub mean_method2: Vec<f64>,
}

/// Common channel draws shared by every sensing SNR of a calibration.
struct DrawSet {
    channels: Vec<ChannelMatrix>,
    directions: Vec<CVector>,
}

impl DrawSet {
    fn means(&self, search: &CrossoverSearch, gamma_s_db: f64, exec: Execution) -> Result<(f64, f64)> {
        let params = NetworkParams::from_snr(
            search.num_sensors,
            search.num_antennas,
            from_db(gamma_s_db),
            search.gamma_c,
            search.p1,
        )?;
        let noise = SensingNoiseModel::from_params(&params);
        let pairs = exec.try_map(self.channels.len(), |t| -> Result<(f64, f64)> {
            let h = &self.channels[t];
            let (a1, _) = method1(h, &params)?;
            let a2 = GainVector::with_full_power(self.directions[t].clone(), params.power())?;
            Ok((
                finite_exponent(h, &a1, &params, &noise)?,
                finite_exponent(h, &a2, &params, &noise)?,
            ))
        })?;
        let n = pairs.len() as f64;
        Ok((
            pairs.iter().map(|p| p.0).sum::<f64>() / n,
            pairs.iter().map(|p| p.1).sum::<f64>() / n,
        ))
    }
}

/// Locates the sensing SNR where the mean finite-L exponents of Method I
/// and Method II cross.
///
/// The same `trials` channel draws (draw `t` from `rng.substream(t)`) are
/// used at every SNR, the grid is scanned for the first sign change of
/// `mean(E_I − E_II)`, and the bracket is refined by bisection in dB.
pub fn calibrate_crossover(
    search: &CrossoverSearch,
    model: ChannelModel,
    trials: usize,
    rng: &RandomSource,
    exec: Execution,
) -> Result<CrossoverCalibration> {
    search.validate()?;
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let draws = exec.try_map(trials, |t| -> Result<(ChannelMatrix, CVector)> {
        let h = sample_channel(
            model,
            search.num_antennas,
            search.num_sensors,
            &mut rng.substream(t as u64),
        )?;
        let v = top_right_singular_vector(&h)?;
        Ok((h, v))
    })?;
    let (channels, directions) = draws.into_iter().unzip();
    let set = DrawSet { channels, directions };

    let grid = &search.gamma_s_db_grid;
    let mut m1 = Vec::with_capacity(grid.len());
    let mut m2 = Vec::with_capacity(grid.len());
    for &g in grid {
        let (a, b) = set.means(search, g, exec)?;
        m1.push(a);
        m2.push(b);
    }
    let winner = |a: f64, b: f64| if a > b { Method::MethodI } else { Method::MethodII };

    let mut outcome = CrossoverOutcome::NoCrossover {
        dominant: winner(m1[0], m2[0]),
    };
    for i in 0..grid.len() - 1 {
        let lo_side = winner(m1[i], m2[i]);
        if winner(m1[i + 1], m2[i + 1]) == lo_side {
            continue;
        }
        let (mut lo, mut hi) = (grid[i], grid[i + 1]);
        if hi.is_finite() {
            while hi - lo > 1e-3 {
                let mid = 0.5 * (lo + hi);
                let (a, b) = set.means(search, mid, exec)?;
                if winner(a, b) == lo_side {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            outcome = CrossoverOutcome::Crossover {
                gamma_s_db: 0.5 * (lo + hi),
                below: lo_side,
            };
        } else {
            outcome = CrossoverOutcome::Crossover {
                gamma_s_db: lo,
                below: lo_side,
            };
        }
        break;
    }
    if let CrossoverOutcome::NoCrossover { .. } = outcome {
        let total1: f64 = m1.iter().sum();
        let total2: f64 = m2.iter().sum();
        outcome = CrossoverOutcome::NoCrossover {
            dominant: winner(total1, total2),
        };
    }
    Ok(CrossoverCalibration {
        outcome,
        gamma_s_db: grid.clone(),
        mean_method1: m1,
        mean_method2: m2,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    num_sensors: usize,
    num_antennas: usize,
    gamma_c: u64,
    p1: u64,
    model: (u8, u64),
    grid: Vec<u64>,
    trials: usize,
    seed: (u64, u64),
}

/// Memoises crossover calibrations per parameter tuple, since the
/// crossover depends on the system parameters but not on the channel
/// realisation being served.
#[derive(Debug, Default)]
pub struct CrossoverCache {
    entries: Mutex<HashMap<CacheKey, CrossoverCalibration>>,
}

impl CrossoverCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_calibrate(
        &self,
        search: &CrossoverSearch,
        model: ChannelModel,
        trials: usize,
        rng: &RandomSource,
        exec: Execution,
    ) -> Result<CrossoverCalibration> {
        let key = CacheKey {
            num_sensors: search.num_sensors,
            num_antennas: search.num_antennas,
            gamma_c: search.gamma_c.to_bits(),
            p1: search.p1.to_bits(),
            model: match model {
                ChannelModel::Awgn => (0, 0),
                ChannelModel::Ricean { k } => (1, k.to_bits()),
                ChannelModel::Rayleigh => (2, 0),
            },
            grid: search.gamma_s_db_grid.iter().map(|x| x.to_bits()).collect(),
            trials,
            seed: (rng.master_seed(), rng.stream_id()),
        };
        if let Some(hit) = self.entries.lock().expect("cache poisoned").get(&key) {
            return Ok(hit.clone());
        }
        let cal = calibrate_crossover(search, model, trials, rng, exec)?;
        self.entries
            .lock()
            .expect("cache poisoned")
            .insert(key, cal.clone());
        Ok(cal)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
