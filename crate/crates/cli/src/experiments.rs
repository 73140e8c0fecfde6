//! Experiment runners. Each returns its rows in grid order (series order
//! fixed within a grid point) plus the number of SDR solves that hit their
//! iteration limit.

use macdet_core::allocation::{
    allocate, finite_exponent, CrossoverCache, CrossoverOutcome, CrossoverSearch, Method, SchemeChoice,
};
use macdet_core::detection::{estimate_pe_montecarlo_with, pe_conditional};
use macdet_core::exponents::{
    bound_c, bounds_asymptotic, e_awgn, e_csis1_numeric, e_nocsis, e_po1, gain_inf_bound, mp_lambda_max,
    SnrPoint, ZetaFactor,
};
use macdet_core::model::sample_channel;
use macdet_core::numerics::hermitian_eig;
use macdet_core::sdr::{
    brute_force_phase, extract_phases, quadratic_objective, solve_sdp, AdmmSettings, SdpProblem,
    BRUTE_FORCE_LIMIT,
};
use macdet_core::{
    from_db, to_db, CMatrix, ChannelMatrix, ChannelModel, Complex64, Error, Execution, NetworkParams,
    RandomSource, SensingNoiseModel,
};

use crate::config::{Base, Config, NoiseSpec, SchemeName, Sweep, Variable};
use crate::output::Row;
use crate::CliError;

/// Stream reserved for crossover calibration draws.
const CALIBRATION_STREAM: u64 = 1 << 32;
/// Sensing-SNR grid (dB) scanned when calibrating the hybrid crossover.
const CROSSOVER_GRID_DB: (f64, f64, f64) = (-10.0, 30.0, 2.0);

#[derive(Debug, Default)]
pub struct Outcome {
    pub rows: Vec<Row>,
    pub nonconverged: usize,
}

/// One grid point: the base operating point with the swept value applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub num_sensors: usize,
    pub num_antennas: usize,
    pub gamma_s: f64,
    pub gamma_c: f64,
    pub p1: f64,
    pub model: ChannelModel,
    pub beta: f64,
}

impl Point {
    pub fn params(&self) -> Result<NetworkParams, CliError> {
        Ok(NetworkParams::from_snr(
            self.num_sensors,
            self.num_antennas,
            self.gamma_s,
            self.gamma_c,
            self.p1,
        )?)
    }

    pub fn snr(&self) -> SnrPoint {
        SnrPoint {
            gamma_s: self.gamma_s,
            gamma_c: self.gamma_c,
            p1: self.p1,
            k: self.model.k_factor(),
            n: self.num_antennas,
        }
    }
}

pub fn model_with_k(k: f64) -> ChannelModel {
    if k == 0.0 {
        ChannelModel::Rayleigh
    } else {
        ChannelModel::Ricean { k }
    }
}

fn point(base: &Base, n: usize, variable: Option<Variable>, x: f64) -> Point {
    let mut p = Point {
        num_sensors: base.num_sensors,
        num_antennas: n,
        gamma_s: base.gamma_s,
        gamma_c: base.gamma_c,
        p1: base.p1,
        model: base.model,
        beta: 1.0,
    };
    match variable {
        Some(Variable::GammaS) => p.gamma_s = from_db(x),
        Some(Variable::GammaC) => p.gamma_c = from_db(x),
        Some(Variable::N) => p.num_antennas = x as usize,
        Some(Variable::L) => p.num_sensors = x as usize,
        Some(Variable::K) => p.model = model_with_k(x),
        Some(Variable::Beta) => p.beta = x,
        None => {}
    }
    p
}

fn noise_for(spec: NoiseSpec, params: &NetworkParams) -> Result<SensingNoiseModel, CliError> {
    Ok(match spec {
        NoiseSpec::Iid => SensingNoiseModel::from_params(params),
        NoiseSpec::Exponential { rho } => {
            let l = params.num_sensors();
            let s2 = params.sigma_eta_sq();
            let cov = CMatrix::from_fn(l, l, |i, j| {
                Complex64::new(s2 * rho.powi(i.abs_diff(j) as i32), 0.0)
            });
            SensingNoiseModel::correlated(cov)?
        }
    })
}

fn fmt_k(k: f64) -> String {
    format!("{k}")
}

/// Series label `name(args)` listing the parameters that are not swept.
fn label(name: &str, args: &[Option<String>]) -> String {
    let args: Vec<&str> = args.iter().flatten().map(String::as_str).collect();
    if args.is_empty() {
        name.to_string()
    } else {
        format!("{name}({})", args.join(","))
    }
}

/// Rows for one grid point.
struct Emitter<'a> {
    experiment: &'a str,
    x_name: &'a str,
    x_value: f64,
    seed: u64,
}

impl Emitter<'_> {
    fn row(&self, series: impl Into<String>, value: f64, ci95: Option<f64>) -> Row {
        Row {
            experiment: self.experiment.to_string(),
            series: series.into(),
            x_name: self.x_name.to_string(),
            x_value: self.x_value,
            value,
            ci95,
            seed: self.seed,
        }
    }
}

/// Grid points as `(x, Some(variable))`, or a single unswept point.
fn grid_of(sweep: &Option<Sweep>) -> Vec<(f64, Option<Variable>)> {
    match sweep {
        Some(s) => s.grid.iter().map(|&x| (x, Some(s.variable))).collect(),
        None => vec![(f64::NAN, None)],
    }
}

/// Antenna counts to iterate, or `None` when `N` itself is swept.
fn antenna_list(cfg: &Config) -> Vec<Option<usize>> {
    match &cfg.sweep {
        Some(s) if s.variable == Variable::N => vec![None],
        _ => cfg.base.antennas.iter().map(|&n| Some(n)).collect(),
    }
}

fn n_arg(n: Option<usize>, many: bool) -> Option<String> {
    n.filter(|_| many).map(|n| format!("N={n}"))
}

/// Closed-form exponents over the sweep.
pub fn exponent_sweep(cfg: &Config) -> Result<Outcome, CliError> {
    let sweep = cfg.sweep.as_ref().expect("validated");
    let exp = cfg.experiment.name();
    let antennas = antenna_list(cfg);
    let k_swept = sweep.variable == Variable::K;
    let mut out = Outcome::default();
    for &x in &sweep.grid {
        let em = Emitter {
            experiment: exp,
            x_name: sweep.variable.x_name(),
            x_value: x,
            seed: cfg.seed,
        };
        for &n in &antennas {
            let p = point(&cfg.base, n.unwrap_or(1), Some(sweep.variable), x);
            let pt = p.snr();
            let n_lab = n.map(|n| n.to_string()).unwrap_or_else(|| "N".into());
            let k_lab = if k_swept { "K".to_string() } else { fmt_k(pt.k) };
            out.rows
                .push(em.row(label("E_AWGN", &[n.map(|n| format!("N={n}"))]), e_awgn(&pt), None));
            if p.model != ChannelModel::Awgn {
                let k_arg = (!k_swept).then(|| format!("K={}", fmt_k(pt.k)));
                out.rows.push(em.row(
                    label("E_NoCSIS", &[n.map(|n| format!("N={n}")), k_arg]),
                    e_nocsis(&pt),
                    None,
                ));
                out.rows
                    .push(em.row(format!("C({n_lab},{k_lab})"), bound_c(&pt), None));
                if n == Some(1) {
                    let params = p.params()?;
                    out.rows
                        .push(em.row("E_CSIS(1)", e_csis1_numeric(&params, &p.model), None));
                    let zeta = ZetaFactor::from_model(&p.model);
                    out.rows.push(em.row("E_PO(1)", e_po1(&pt, zeta), None));
                }
            }
        }
    }
    Ok(out)
}

/// Analytic and simulated error probability of the detector on one channel
/// draw per grid point.
pub fn montecarlo(cfg: &Config, exec: Execution) -> Result<Outcome, CliError> {
    let trials = cfg.trials_or(100_000);
    let exp = cfg.experiment.name();
    let antennas = antenna_list(cfg);
    let many = antennas.len() > 1;
    let mut out = Outcome::default();
    for (i, (x, var)) in grid_of(&cfg.sweep).into_iter().enumerate() {
        let em = Emitter {
            experiment: exp,
            x_name: var.map_or("point", Variable::x_name),
            x_value: if var.is_some() { x } else { 0.0 },
            seed: cfg.seed,
        };
        for (j, &n) in antennas.iter().enumerate() {
            let p = point(&cfg.base, n.unwrap_or(1), var, x);
            let params = p.params()?;
            let noise = noise_for(cfg.base.noise, &params)?;
            let rng = RandomSource::new(cfg.seed, ((i as u64) << 16) | j as u64);
            let h = sample_channel(p.model, p.num_antennas, p.num_sensors, &mut rng.substream(0))?;
            for (s, &scheme) in cfg.schemes.iter().enumerate() {
                let choice = fixed_choice(scheme);
                let tag = |what: &str| label(what, &[Some(scheme.name().to_string()), n_arg(n, many)]);
                let alpha = match allocate(&choice, &h, &params) {
                    Err(Error::NotConverged { .. }) => {
                        out.nonconverged += 1;
                        out.rows.push(em.row(tag("analytic"), f64::NAN, None));
                        out.rows.push(em.row(tag("montecarlo"), f64::NAN, Some(f64::NAN)));
                        continue;
                    }
                    r => r?,
                };
                let analytic = pe_conditional(&h, &alpha, &params, &noise)?;
                let est = estimate_pe_montecarlo_with(
                    &h,
                    &alpha,
                    &params,
                    &noise,
                    trials,
                    &rng.substream(1 + s as u64),
                    exec,
                )?;
                out.rows.push(em.row(tag("analytic"), analytic, None));
                out.rows
                    .push(em.row(tag("montecarlo"), est.p_hat, Some(est.ci95_halfwidth)));
            }
        }
    }
    Ok(out)
}

fn fixed_choice(scheme: SchemeName) -> SchemeChoice {
    match scheme {
        SchemeName::Uniform => SchemeChoice::Uniform,
        SchemeName::OptSingle => SchemeChoice::OptSingle,
        SchemeName::PhaseOnly => SchemeChoice::PhaseOnlyN1,
        SchemeName::Method1 => SchemeChoice::MethodI,
        SchemeName::Method2 => SchemeChoice::MethodII,
        SchemeName::Sdr => SchemeChoice::SdrPhase,
        SchemeName::Hybrid => unreachable!("hybrid depends on the operating point"),
    }
}

fn method_choice(m: Method) -> SchemeChoice {
    match m {
        Method::MethodI => SchemeChoice::MethodI,
        Method::MethodII => SchemeChoice::MethodII,
    }
}

/// The hybrid rule at sensing SNR `gamma_s`: whichever method the
/// calibration found better on that side of the crossover.
fn hybrid_choice(outcome: CrossoverOutcome, gamma_s: f64) -> Result<SchemeChoice, CliError> {
    Ok(match outcome {
        CrossoverOutcome::NoCrossover { dominant } => method_choice(dominant),
        CrossoverOutcome::Crossover {
            gamma_s_db,
            below: Method::MethodI,
        } => SchemeChoice::hybrid(from_db(gamma_s_db))?,
        CrossoverOutcome::Crossover {
            gamma_s_db,
            below: Method::MethodII,
        } => {
            if to_db(gamma_s) < gamma_s_db {
                SchemeChoice::MethodII
            } else {
                SchemeChoice::MethodI
            }
        }
    })
}

fn crossover_grid() -> Vec<f64> {
    let (lo, hi, step) = CROSSOVER_GRID_DB;
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

/// Mean and 95% half-width of a sample (no interval for a single value).
fn mean_ci(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some(1.96 * (var / n).sqrt()))
}

/// Mean finite-L exponent of each allocation scheme over common channel
/// draws, with the `C(N,K)` bound and the single-antenna optimum for
/// reference.
pub fn schemes(cfg: &Config, exec: Execution) -> Result<Outcome, CliError> {
    let draws = cfg.trials_or(100);
    let exp = cfg.experiment.name();
    let antennas = antenna_list(cfg);
    let many = antennas.len() > 1;
    let cache = CrossoverCache::new();
    let channel_rng = RandomSource::new(cfg.seed, 0);
    let calib_rng = RandomSource::new(cfg.seed, CALIBRATION_STREAM);
    let k_swept = matches!(&cfg.sweep, Some(s) if s.variable == Variable::K);
    let mut out = Outcome::default();
    for (x, var) in grid_of(&cfg.sweep) {
        let em = Emitter {
            experiment: exp,
            x_name: var.map_or("point", Variable::x_name),
            x_value: if var.is_some() { x } else { 0.0 },
            seed: cfg.seed,
        };
        let mut csis1_done = false;
        for &n in &antennas {
            let p = point(&cfg.base, n.unwrap_or(1), var, x);
            let params = p.params()?;
            let noise = noise_for(cfg.base.noise, &params)?;
            let channels: Vec<ChannelMatrix> = exec.try_map(draws, |d| {
                sample_channel(
                    p.model,
                    p.num_antennas,
                    p.num_sensors,
                    &mut channel_rng.substream(d as u64),
                )
            })?;
            for &scheme in &cfg.schemes {
                let choice = if scheme == SchemeName::Hybrid {
                    let search = CrossoverSearch {
                        num_sensors: p.num_sensors,
                        num_antennas: p.num_antennas,
                        gamma_c: p.gamma_c,
                        p1: p.p1,
                        gamma_s_db_grid: crossover_grid(),
                    };
                    let calib = cache.get_or_calibrate(&search, p.model, draws, &calib_rng, exec)?;
                    hybrid_choice(calib.outcome, p.gamma_s)?
                } else {
                    fixed_choice(scheme)
                };
                let per_draw = exec.try_map(draws, |d| -> Result<Option<f64>, Error> {
                    match allocate(&choice, &channels[d], &params) {
                        Ok(alpha) => Ok(Some(finite_exponent(&channels[d], &alpha, &params, &noise)?)),
                        Err(Error::NotConverged { .. }) => Ok(None),
                        Err(e) => Err(e),
                    }
                })?;
                let series = label(scheme.name(), &[n_arg(n, many)]);
                let failed = per_draw.iter().filter(|v| v.is_none()).count();
                if failed > 0 {
                    out.nonconverged += failed;
                    out.rows.push(em.row(series, f64::NAN, Some(f64::NAN)));
                } else {
                    let values: Vec<f64> = per_draw.into_iter().flatten().collect();
                    let (mean, ci) = mean_ci(&values);
                    out.rows.push(em.row(series, mean, ci));
                }
            }
            let pt = p.snr();
            let n_lab = n.map(|n| n.to_string()).unwrap_or_else(|| "N".into());
            let k_lab = if k_swept { "K".to_string() } else { fmt_k(pt.k) };
            out.rows
                .push(em.row(format!("C({n_lab},{k_lab})"), bound_c(&pt), None));
            if p.model != ChannelModel::Awgn && !csis1_done {
                csis1_done = true;
                let single = params.with_antennas(1)?;
                out.rows
                    .push(em.row("E_CSIS(1)", e_csis1_numeric(&single, &p.model), None));
            }
        }
    }
    Ok(out)
}

/// One relaxation instance: bound, rounded value, optional exhaustive
/// optimum, and solver effort.
struct SdrInstance {
    converged: bool,
    bound: f64,
    rounded: f64,
    brute: Option<f64>,
    iterations: usize,
}

fn sdr_instance(
    h: &ChannelMatrix,
    params: &NetworkParams,
    cfg: &Config,
    brute: bool,
) -> Result<SdrInstance, CliError> {
    let l = h.num_sensors();
    let d = params.power() / l as f64;
    let cost: CMatrix = h.entries().adjoint() * h.entries();
    let mut settings = AdmmSettings::for_problem(l, d);
    if let Some(m) = cfg.sdr.max_iter {
        settings.max_iter = m;
    }
    let sol = solve_sdp(&SdpProblem::new(cost.clone(), d)?, &settings)?;
    let alpha = extract_phases(&sol)? * Complex64::new(d.sqrt(), 0.0);
    let brute = if brute {
        Some(brute_force_phase(&cost, d, cfg.sdr.brute_levels)?.0)
    } else {
        None
    };
    Ok(SdrInstance {
        converged: sol.converged,
        bound: sol.objective,
        rounded: quadratic_objective(&cost, &alpha),
        brute,
        iterations: sol.iterations,
    })
}

fn brute_feasible(l: usize, levels: usize) -> bool {
    l <= 8
        && (levels as u128)
            .checked_pow(l as u32 - 1)
            .is_some_and(|c| c <= BRUTE_FORCE_LIMIT)
}

/// Semidefinite relaxation against rounding and exhaustive search of the
/// phase-only design. Without a sweep every instance gets its own rows;
/// with one, each grid point reports means over the instances.
pub fn sdr_compare(cfg: &Config, exec: Execution) -> Result<Outcome, CliError> {
    let instances = cfg.trials_or(10);
    let exp = cfg.experiment.name();
    let antennas = antenna_list(cfg);
    let many = antennas.len() > 1;
    let rng = RandomSource::new(cfg.seed, 0);
    let mut out = Outcome::default();
    let brute_name = format!("brute_force(levels={})", cfg.sdr.brute_levels);
    for (x, var) in grid_of(&cfg.sweep) {
        for &n in &antennas {
            let p = point(&cfg.base, n.unwrap_or(1), var, x);
            let params = p.params()?;
            let brute = brute_feasible(p.num_sensors, cfg.sdr.brute_levels);
            let results = exec.try_map(instances, |t| -> Result<SdrInstance, CliError> {
                let h = sample_channel(
                    p.model,
                    p.num_antennas,
                    p.num_sensors,
                    &mut rng.substream(t as u64),
                )?;
                sdr_instance(&h, &params, cfg, brute)
            })?;
            let series = |name: &str| label(name, &[n_arg(n, many)]);
            let emit = |em: &Emitter, rs: &[&SdrInstance], out: &mut Outcome| {
                let failed = rs.iter().filter(|r| !r.converged).count();
                out.nonconverged += failed;
                let col = |f: &dyn Fn(&SdrInstance) -> f64| -> (f64, Option<f64>) {
                    let v: Vec<f64> = rs.iter().map(|r| f(r)).collect();
                    mean_ci(&v)
                };
                let mut push = |name: &str, (v, ci): (f64, Option<f64>), gated: bool| {
                    if gated && failed > 0 {
                        out.rows
                            .push(em.row(series(name), f64::NAN, ci.map(|_| f64::NAN)));
                    } else {
                        out.rows.push(em.row(series(name), v, ci));
                    }
                };
                push("sdp_bound", col(&|r| r.bound), true);
                push("sdr_rounded", col(&|r| r.rounded), true);
                push("rounding_ratio", col(&|r| r.rounded / r.bound), true);
                if brute {
                    push(&brute_name, col(&|r| r.brute.expect("computed")), false);
                }
                push("iterations", col(&|r| r.iterations as f64), false);
            };
            match var {
                Some(v) => {
                    let em = Emitter {
                        experiment: exp,
                        x_name: v.x_name(),
                        x_value: x,
                        seed: cfg.seed,
                    };
                    let all: Vec<&SdrInstance> = results.iter().collect();
                    emit(&em, &all, &mut out);
                }
                None => {
                    for (t, r) in results.iter().enumerate() {
                        let em = Emitter {
                            experiment: exp,
                            x_name: "instance",
                            x_value: t as f64,
                            seed: cfg.seed,
                        };
                        emit(&em, &[r], &mut out);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Large-system bounds over `beta = L/N`, and the sample largest eigenvalue
/// of `(1/L)·H·H^H` for Rayleigh channels of size `N x round(beta·N)`.
pub fn asymptotic(cfg: &Config, exec: Execution) -> Result<Outcome, CliError> {
    let sweep = cfg.sweep.as_ref().expect("validated");
    let draws = cfg.trials_or(20);
    let exp = cfg.experiment.name();
    let zeta = ZetaFactor::from_model(&cfg.base.model);
    let rng = RandomSource::new(cfg.seed, 0);
    let mut out = Outcome::default();
    for &beta in &sweep.grid {
        let em = Emitter {
            experiment: exp,
            x_name: "beta",
            x_value: beta,
            seed: cfg.seed,
        };
        let p = point(&cfg.base, cfg.base.antennas[0], Some(Variable::Beta), beta);
        let b = bounds_asymptotic(beta, &p.snr());
        out.rows.push(em.row("lambda_max_mp", mp_lambda_max(beta), None));
        for &n in &cfg.base.antennas {
            let l = ((beta * n as f64).round() as usize).max(1);
            let lams = exec.try_map(draws, |d| -> Result<f64, Error> {
                let h = sample_channel(ChannelModel::Rayleigh, n, l, &mut rng.substream(d as u64))?;
                let g = h.entries() * h.entries().adjoint() / Complex64::new(l as f64, 0.0);
                Ok(hermitian_eig(&g)?.max_eigenvalue())
            })?;
            let (mean, ci) = mean_ci(&lams);
            out.rows
                .push(em.row(format!("lambda_max_empirical(N={n},L={l})"), mean, ci));
        }
        out.rows.push(em.row("E_AWGN_inf", b.e_awgn_inf, None));
        out.rows.push(em.row("B_inf", b.b_inf, None));
        out.rows.push(em.row("C_inf", b.c_inf, None));
        out.rows
            .push(em.row("gain_inf_bound", gain_inf_bound(beta, zeta), None));
    }
    Ok(out)
}
