//! System parameters, channel and sensing-noise models, and seeded random
//! streams.

use std::f64::consts::PI;

use nalgebra::Cholesky;
use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::numerics::{bessel_i0_scaled, hermitian_asymmetry, hermitian_eig, integrate};
use crate::{CMatrix, CVector, Error, Result};

/// Scalar parameters of the sensor network.
///
/// `sigma_eta_sq` may be zero (noise-free sensing); every other variance and
/// power must be strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkParams {
    num_sensors: usize,
    num_antennas: usize,
    theta: f64,
    sigma_eta_sq: f64,
    sigma_nu_sq: f64,
    p1: f64,
    total_power: f64,
}

impl NetworkParams {
    pub fn new(
        num_sensors: usize,
        num_antennas: usize,
        theta: f64,
        sigma_eta_sq: f64,
        sigma_nu_sq: f64,
        p1: f64,
        total_power: f64,
    ) -> Result<Self> {
        if num_sensors == 0 {
            return Err(Error::param("num_sensors", "must be at least 1"));
        }
        if num_antennas == 0 {
            return Err(Error::param("num_antennas", "must be at least 1"));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::param("theta", format!("must be positive, got {theta}")));
        }
        if !(sigma_eta_sq >= 0.0 && sigma_eta_sq.is_finite()) {
            return Err(Error::param(
                "sigma_eta_sq",
                format!("must be non-negative, got {sigma_eta_sq}"),
            ));
        }
        if !(sigma_nu_sq > 0.0 && sigma_nu_sq.is_finite()) {
            return Err(Error::param(
                "sigma_nu_sq",
                format!("must be positive, got {sigma_nu_sq}"),
            ));
        }
        if !(p1 > 0.0 && p1 < 1.0) {
            return Err(Error::param("p1", format!("must lie in (0, 1), got {p1}")));
        }
        if !(total_power > 0.0 && total_power.is_finite()) {
            return Err(Error::param(
                "total_power",
                format!("must be positive, got {total_power}"),
            ));
        }
        Ok(Self {
            num_sensors,
            num_antennas,
            theta,
            sigma_eta_sq,
            sigma_nu_sq,
            p1,
            total_power,
        })
    }

    /// Parameters with `theta = 1` and `P_T = 1` realising the requested
    /// sensing and channel SNRs. `gamma_s = +inf` means noise-free sensing.
    pub fn from_snr(
        num_sensors: usize,
        num_antennas: usize,
        gamma_s: f64,
        gamma_c: f64,
        p1: f64,
    ) -> Result<Self> {
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
        Self::new(
            num_sensors,
            num_antennas,
            1.0,
            1.0 / gamma_s,
            1.0 / gamma_c,
            p1,
            1.0,
        )
    }

    pub fn num_sensors(&self) -> usize {
        self.num_sensors
    }
    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn sigma_eta_sq(&self) -> f64 {
        self.sigma_eta_sq
    }
    pub fn sigma_nu_sq(&self) -> f64 {
        self.sigma_nu_sq
    }
    pub fn p1(&self) -> f64 {
        self.p1
    }
    pub fn p0(&self) -> f64 {
        1.0 - self.p1
    }
    pub fn total_power(&self) -> f64 {
        self.total_power
    }

    /// Gain budget `P = Σ|α_i|²`, see [`derive_power`].
    pub fn power(&self) -> f64 {
        derive_power(self)
    }

    /// Sensing SNR `θ²/σ_η²`; `+inf` when there is no sensing noise.
    pub fn gamma_s(&self) -> f64 {
        if self.sigma_eta_sq == 0.0 {
            f64::INFINITY
        } else {
            self.theta * self.theta / self.sigma_eta_sq
        }
    }

    /// Channel SNR `P_T/σ_ν²`.
    pub fn gamma_c(&self) -> f64 {
        self.total_power / self.sigma_nu_sq
    }

    /// Bayesian threshold `ln(p0/p1)/2`.
    pub fn tau(&self) -> f64 {
        if self.p1 == 0.5 {
            0.0
        } else {
            0.5 * (self.p0() / self.p1).ln()
        }
    }

    pub fn with_sensors(mut self, num_sensors: usize) -> Result<Self> {
        if num_sensors == 0 {
            return Err(Error::param("num_sensors", "must be at least 1"));
        }
        self.num_sensors = num_sensors;
        Ok(self)
    }

    pub fn with_antennas(mut self, num_antennas: usize) -> Result<Self> {
        if num_antennas == 0 {
            return Err(Error::param("num_antennas", "must be at least 1"));
        }
        self.num_antennas = num_antennas;
        Ok(self)
    }

    pub fn with_sigma_eta_sq(self, sigma_eta_sq: f64) -> Result<Self> {
        Self::new(
            self.num_sensors,
            self.num_antennas,
            self.theta,
            sigma_eta_sq,
            self.sigma_nu_sq,
            self.p1,
            self.total_power,
        )
    }
}

/// Gain budget implied by the average transmit-power constraint:
/// `P = P_T / (p1·θ² + σ_η²)`.
pub fn derive_power(params: &NetworkParams) -> f64 {
    params.total_power / (params.p1 * params.theta * params.theta + params.sigma_eta_sq)
}

/// Fading distribution of every channel coefficient, normalised to
/// `E|h|² = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelModel {
    /// `h = 1`.
    Awgn,
    /// `h = sqrt(K/(K+1)) + CN(0, 1/(K+1))`.
    Ricean { k: f64 },
    /// Ricean with `K = 0`.
    Rayleigh,
}

impl ChannelModel {
    pub fn ricean(k: f64) -> Result<Self> {
        if k >= 0.0 && k.is_finite() {
            Ok(ChannelModel::Ricean { k })
        } else {
            Err(Error::param(
                "K",
                format!("must be finite and non-negative, got {k}"),
            ))
        }
    }

    /// Ricean K-factor; `+inf` for AWGN.
    pub fn k_factor(&self) -> f64 {
        match *self {
            ChannelModel::Awgn => f64::INFINITY,
            ChannelModel::Ricean { k } => k,
            ChannelModel::Rayleigh => 0.0,
        }
    }

    /// Deterministic line-of-sight amplitude `sqrt(K/(K+1))`.
    pub fn los_amplitude(&self) -> f64 {
        match *self {
            ChannelModel::Awgn => 1.0,
            ChannelModel::Ricean { k } => (k / (k + 1.0)).sqrt(),
            ChannelModel::Rayleigh => 0.0,
        }
    }

    /// Variance `1/(K+1)` of the diffuse component.
    pub fn diffuse_variance(&self) -> f64 {
        match *self {
            ChannelModel::Awgn => 0.0,
            ChannelModel::Ricean { k } => 1.0 / (k + 1.0),
            ChannelModel::Rayleigh => 1.0,
        }
    }

    /// Density of `|h|` at `r ≥ 0` (Rice distribution). Not defined for AWGN.
    pub fn amplitude_density(&self, r: f64) -> f64 {
        let k = self.k_factor();
        if r < 0.0 || !k.is_finite() {
            return 0.0;
        }
        let kp1 = k + 1.0;
        let arg = 2.0 * r * (k * kp1).sqrt();
        // 2(K+1) r exp(-K - (K+1) r²) I0(arg), with I0 scaled to avoid overflow.
        let exponent = -(kp1.sqrt() * r - k.sqrt()).powi(2);
        2.0 * kp1 * r * exponent.exp() * bessel_i0_scaled(arg)
    }

    /// Upper integration limit beyond which the amplitude density is
    /// negligible (below `e^{-60}` relative).
    pub(crate) fn amplitude_cutoff(&self) -> f64 {
        let kp1 = self.k_factor() + 1.0;
        self.los_amplitude() + (60.0 / kp1).sqrt()
    }

    fn draw(&self, rng: &mut RandomSource) -> Complex64 {
        match *self {
            ChannelModel::Awgn => Complex64::new(1.0, 0.0),
            _ => {
                let diffuse = rng.complex_normal(self.diffuse_variance());
                Complex64::new(self.los_amplitude(), 0.0) + diffuse
            }
        }
    }
}

/// First absolute moment `E|h|` of the channel model.
///
/// Exact for AWGN (1) and Rayleigh (`√π/2`); Gauss–Kronrod quadrature of the
/// Rice density otherwise.
pub fn mean_abs_h(model: &ChannelModel) -> f64 {
    match *model {
        ChannelModel::Awgn => 1.0,
        ChannelModel::Rayleigh => 0.5 * PI.sqrt(),
        ChannelModel::Ricean { k: 0.0 } => 0.5 * PI.sqrt(),
        ChannelModel::Ricean { .. } => integrate(
            |r| r * model.amplitude_density(r),
            0.0,
            model.amplitude_cutoff(),
            1e-12,
        ),
    }
}

/// Sampled `N x L` channel matrix; entry `(n, l)` links sensor `l` to
/// antenna `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    entries: CMatrix,
    model: ChannelModel,
    seed_tag: u64,
}

impl ChannelMatrix {
    /// Wraps explicit entries (e.g. for tests or externally supplied
    /// channels).
    pub fn from_entries(entries: CMatrix, model: ChannelModel, seed_tag: u64) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::DimensionMismatch(
                "channel matrix must be non-empty".into(),
            ));
        }
        Ok(Self {
            entries,
            model,
            seed_tag,
        })
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }
    pub fn model(&self) -> ChannelModel {
        self.model
    }
    pub fn seed_tag(&self) -> u64 {
        self.seed_tag
    }
    pub fn num_antennas(&self) -> usize {
        self.entries.nrows()
    }
    pub fn num_sensors(&self) -> usize {
        self.entries.ncols()
    }

    /// Channel row of antenna `n` (length `L`).
    pub fn row(&self, n: usize) -> Vec<Complex64> {
        self.entries.row(n).iter().copied().collect()
    }

    /// The sub-network formed by the first `l` sensors.
    pub fn leading_sensors(&self, l: usize) -> Result<Self> {
        if l == 0 || l > self.num_sensors() {
            return Err(Error::DimensionMismatch(format!(
                "cannot take {l} of {} sensors",
                self.num_sensors()
            )));
        }
        Ok(Self {
            entries: self.entries.columns(0, l).into_owned(),
            model: self.model,
            seed_tag: self.seed_tag,
        })
    }

    /// The single-antenna network seen by antenna `n`.
    pub fn antenna(&self, n: usize) -> Result<Self> {
        if n >= self.num_antennas() {
            return Err(Error::DimensionMismatch(format!(
                "antenna {n} out of {}",
                self.num_antennas()
            )));
        }
        Ok(Self {
            entries: self.entries.rows(n, 1).into_owned(),
            model: self.model,
            seed_tag: self.seed_tag,
        })
    }
}

/// Draws an `N x L` channel. Entries are generated sensor by sensor, so the
/// first `l` columns of a wider draw equal an `l`-sensor draw from the same
/// stream.
pub fn sample_channel(
    model: ChannelModel,
    num_antennas: usize,
    num_sensors: usize,
    rng: &mut RandomSource,
) -> Result<ChannelMatrix> {
    if num_antennas == 0 || num_sensors == 0 {
        return Err(Error::DimensionMismatch(
            "channel dimensions must be positive".into(),
        ));
    }
    let mut entries = CMatrix::zeros(num_antennas, num_sensors);
    for l in 0..num_sensors {
        for n in 0..num_antennas {
            entries[(n, l)] = model.draw(rng);
        }
    }
    Ok(ChannelMatrix {
        entries,
        model,
        seed_tag: rng.stream_id(),
    })
}

/// Sensing-noise covariance across sensors.
#[derive(Debug, Clone, PartialEq)]
pub enum SensingNoiseModel {
    /// `η_l ~ CN(0, σ²)` independently.
    Iid { variance: f64 },
    /// `η ~ CN(0, R_η)` with full-rank Hermitian `R_η`.
    Correlated(CorrelatedNoise),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatedNoise {
    covariance: CMatrix,
    factor: CMatrix,
    lambda_min: f64,
}

impl CorrelatedNoise {
    pub fn covariance(&self) -> &CMatrix {
        &self.covariance
    }
    /// Lower Cholesky factor `F` with `F F^H = R_η`.
    pub fn factor(&self) -> &CMatrix {
        &self.factor
    }
    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }
}

impl SensingNoiseModel {
    pub fn iid(variance: f64) -> Result<Self> {
        if variance >= 0.0 && variance.is_finite() {
            Ok(SensingNoiseModel::Iid { variance })
        } else {
            Err(Error::param(
                "sigma_eta_sq",
                format!("must be non-negative, got {variance}"),
            ))
        }
    }

    /// The iid model implied by `params`.
    pub fn from_params(params: &NetworkParams) -> Self {
        SensingNoiseModel::Iid {
            variance: params.sigma_eta_sq(),
        }
    }

    /// Validates `R_η` (Hermitian to 1e-12 relative, strictly positive
    /// definite) and caches its Cholesky factor and smallest eigenvalue.
    pub fn correlated(covariance: CMatrix) -> Result<Self> {
        let asym = hermitian_asymmetry(&covariance);
        if asym > 1e-12 {
            return Err(Error::NotHermitian(asym));
        }
        let eig = hermitian_eig(&covariance)?;
        let lambda_min = eig.min_eigenvalue();
        if !(lambda_min > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        let factor = Cholesky::new(covariance.clone())
            .ok_or(Error::NotPositiveDefinite)?
            .unpack();
        Ok(SensingNoiseModel::Correlated(CorrelatedNoise {
            covariance,
            factor,
            lambda_min,
        }))
    }

    /// Number of sensors the model is tied to (`None` for iid).
    pub fn dim(&self) -> Option<usize> {
        match self {
            SensingNoiseModel::Iid { .. } => None,
            SensingNoiseModel::Correlated(c) => Some(c.covariance.nrows()),
        }
    }

    /// Smallest eigenvalue of the covariance (`σ²` for iid).
    pub fn lambda_min(&self) -> f64 {
        match self {
            SensingNoiseModel::Iid { variance } => *variance,
            SensingNoiseModel::Correlated(c) => c.lambda_min,
        }
    }

    /// Dense `L x L` covariance.
    pub fn covariance(&self, num_sensors: usize) -> CMatrix {
        match self {
            SensingNoiseModel::Iid { variance } => {
                CMatrix::identity(num_sensors, num_sensors) * Complex64::new(*variance, 0.0)
            }
            SensingNoiseModel::Correlated(c) => c.covariance.clone(),
        }
    }

    pub(crate) fn check_dim(&self, num_sensors: usize) -> Result<()> {
        match self.dim() {
            Some(d) if d != num_sensors => Err(Error::DimensionMismatch(format!(
                "noise covariance is {d}x{d} but there are {num_sensors} sensors"
            ))),
            _ => Ok(()),
        }
    }
}

/// Draws one sensing-noise vector of length `num_sensors`.
pub fn sample_sensing_noise(
    model: &SensingNoiseModel,
    num_sensors: usize,
    rng: &mut RandomSource,
) -> Result<CVector> {
    model.check_dim(num_sensors)?;
    Ok(match model {
        SensingNoiseModel::Iid { variance } => {
            if *variance == 0.0 {
                CVector::zeros(num_sensors)
            } else {
                CVector::from_fn(num_sensors, |_, _| rng.complex_normal(*variance))
            }
        }
        SensingNoiseModel::Correlated(c) => {
            let white = CVector::from_fn(num_sensors, |_, _| rng.complex_normal(1.0));
            &c.factor * white
        }
    })
}

/// Seeded, splittable random stream.
///
/// A ChaCha12 generator keyed by `master_seed` and positioned on stream
/// `stream_id`. Equal `(master_seed, stream_id)` pairs replay identical
/// draws; [`RandomSource::substream`] derives independent child streams by
/// index, which is how Monte Carlo loops stay independent of thread count.
#[derive(Debug, Clone)]
pub struct RandomSource {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

impl RandomSource {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        Self {
            master_seed,
            stream_id,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Child stream `index` of this stream. Depends only on
    /// `(master_seed, stream_id, index)`, not on how much of the parent has
    /// been consumed.
    pub fn substream(&self, index: u64) -> RandomSource {
        let id = splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(0x632B_E59B_D9B4_E019)));
        RandomSource::new(self.master_seed, id)
    }

    /// `CN(0, variance)`: independent real and imaginary parts, each with
    /// variance `variance/2`.
    pub fn complex_normal(&mut self, variance: f64) -> Complex64 {
        let s = (0.5 * variance).sqrt();
        let re: f64 = self.rng.sample(StandardNormal);
        let im: f64 = self.rng.sample(StandardNormal);
        Complex64::new(s * re, s * im)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
