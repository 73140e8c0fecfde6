//! Experiment configuration: strict TOML parsing and validation.
//!
//! Every table rejects unknown keys, and every check runs before any
//! computation starts. SNRs are given in dB (`_db` keys, `10·log10`).

use std::path::{Path, PathBuf};

use macdet_core::{from_db, ChannelModel};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Experiment {
    ExponentSweep,
    Montecarlo,
    Schemes,
    SdrCompare,
    Asymptotic,
    #[value(name = "figure-2")]
    Figure2,
    #[value(name = "figure-3")]
    Figure3,
    #[value(name = "figure-4")]
    Figure4,
    #[value(name = "figure-5")]
    Figure5,
    #[value(name = "figure-6")]
    Figure6,
    #[value(name = "figure-7")]
    Figure7,
    #[value(name = "figure-8")]
    Figure8,
    #[value(name = "figure-9")]
    Figure9,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::ExponentSweep => "exponent-sweep",
            Experiment::Montecarlo => "montecarlo",
            Experiment::Schemes => "schemes",
            Experiment::SdrCompare => "sdr-compare",
            Experiment::Asymptotic => "asymptotic",
            Experiment::Figure2 => "figure-2",
            Experiment::Figure3 => "figure-3",
            Experiment::Figure4 => "figure-4",
            Experiment::Figure5 => "figure-5",
            Experiment::Figure6 => "figure-6",
            Experiment::Figure7 => "figure-7",
            Experiment::Figure8 => "figure-8",
            Experiment::Figure9 => "figure-9",
        }
    }

    pub fn is_figure(self) -> bool {
        self.name().starts_with("figure-")
    }

    /// Sweep variables the experiment understands.
    fn variables(self) -> &'static [Variable] {
        use Variable::*;
        match self {
            Experiment::ExponentSweep => &[GammaS, GammaC, N, K],
            Experiment::Montecarlo | Experiment::Schemes | Experiment::SdrCompare => {
                &[GammaS, GammaC, N, L, K]
            }
            Experiment::Asymptotic => &[Beta],
            _ => &[],
        }
    }

    fn needs_sweep(self) -> bool {
        !matches!(self, Experiment::SdrCompare) && !self.is_figure()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    GammaS,
    GammaC,
    N,
    L,
    K,
    Beta,
}

impl Variable {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "gamma_s" => Variable::GammaS,
            "gamma_c" => Variable::GammaC,
            "N" => Variable::N,
            "L" => Variable::L,
            "K" => Variable::K,
            "beta" => Variable::Beta,
            _ => return None,
        })
    }

    /// Column label for the swept quantity; SNR grids stay in dB.
    pub fn x_name(self) -> &'static str {
        match self {
            Variable::GammaS => "gamma_s_db",
            Variable::GammaC => "gamma_c_db",
            Variable::N => "N",
            Variable::L => "L",
            Variable::K => "K",
            Variable::Beta => "beta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    Iid,
    /// `R_η[i][j] = σ_η²·ρ^|i−j|`.
    Exponential {
        rho: f64,
    },
}

/// Gain-allocation schemes selectable from a config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeName {
    Uniform,
    OptSingle,
    PhaseOnly,
    Method1,
    Method2,
    Hybrid,
    Sdr,
}

impl SchemeName {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "uniform" => SchemeName::Uniform,
            "opt-single" => SchemeName::OptSingle,
            "phase-only" => SchemeName::PhaseOnly,
            "method1" => SchemeName::Method1,
            "method2" => SchemeName::Method2,
            "hybrid" => SchemeName::Hybrid,
            "sdr" => SchemeName::Sdr,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeName::Uniform => "uniform",
            SchemeName::OptSingle => "opt-single",
            SchemeName::PhaseOnly => "phase-only",
            SchemeName::Method1 => "method1",
            SchemeName::Method2 => "method2",
            SchemeName::Hybrid => "hybrid",
            SchemeName::Sdr => "sdr",
        }
    }
}

/// Operating point shared by all grid points before the sweep is applied.
/// SNRs are linear.
#[derive(Debug, Clone, PartialEq)]
pub struct Base {
    pub num_sensors: usize,
    pub antennas: Vec<usize>,
    pub gamma_s: f64,
    pub gamma_c: f64,
    pub p1: f64,
    pub model: ChannelModel,
    pub noise: NoiseSpec,
}

impl Default for Base {
    fn default() -> Self {
        Self {
            num_sensors: 200,
            antennas: vec![1],
            gamma_s: 1.0,
            gamma_c: 1.0,
            p1: 0.5,
            model: ChannelModel::Ricean { k: 1.0 },
            noise: NoiseSpec::Iid,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub variable: Variable,
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdrOptions {
    pub max_iter: Option<usize>,
    pub brute_levels: usize,
}

impl Default for SdrOptions {
    fn default() -> Self {
        Self {
            max_iter: None,
            brute_levels: 16,
        }
    }
}

/// A validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub experiment: Experiment,
    pub seed: u64,
    pub trials: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub base: Base,
    pub sweep: Option<Sweep>,
    pub schemes: Vec<SchemeName>,
    pub sdr: SdrOptions,
}

impl Config {
    /// A config for `experiment` with default settings, used by the figure
    /// presets.
    pub fn preset(experiment: Experiment) -> Self {
        Self {
            experiment,
            seed: 0,
            trials: None,
            output: None,
            format: Format::Csv,
            base: Base::default(),
            sweep: None,
            schemes: Vec::new(),
            sdr: SdrOptions::default(),
        }
    }

    pub fn trials_or(&self, default: usize) -> usize {
        self.trials.unwrap_or(default)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<String>,
    seed: Option<u64>,
    trials: Option<u64>,
    output: Option<PathBuf>,
    format: Option<Format>,
    schemes: Option<Vec<String>>,
    params: Option<RawParams>,
    model: Option<RawModel>,
    noise: Option<RawNoise>,
    sweep: Option<RawSweep>,
    sdr: Option<RawSdr>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    num_sensors: Option<usize>,
    num_antennas: Option<usize>,
    antennas: Option<Vec<usize>>,
    gamma_s_db: Option<f64>,
    gamma_c_db: Option<f64>,
    p1: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawModel {
    // Empty struct variants, so `deny_unknown_fields` also covers them.
    Awgn {},
    Rayleigh {},
    Ricean { k: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawNoise {
    Iid {},
    Exponential { rho: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    variable: String,
    grid: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSdr {
    max_iter: Option<usize>,
    brute_levels: Option<usize>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Reads and validates the config file for `experiment`.
pub fn load(path: &Path, experiment: Experiment) -> Result<Config, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
    parse(&text, experiment)
}

pub fn parse(text: &str, experiment: Experiment) -> Result<Config, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
    validate(raw, experiment)
}

fn validate(raw: RawConfig, experiment: Experiment) -> Result<Config, CliError> {
    if let Some(name) = &raw.experiment {
        if name != experiment.name() {
            return Err(bad(format!(
                "config is for `{name}` but `{}` was requested",
                experiment.name()
            )));
        }
    }
    let trials = match raw.trials {
        Some(0) => return Err(bad("trials must be at least 1")),
        Some(t) => Some(usize::try_from(t).map_err(|_| bad("trials is too large"))?),
        None => None,
    };
    let mut cfg = Config {
        experiment,
        seed: raw.seed.unwrap_or(0),
        trials,
        output: raw.output,
        format: raw.format.unwrap_or(Format::Csv),
        ..Config::preset(experiment)
    };

    if experiment.is_figure() {
        let fixed = [
            ("params", raw.params.is_some()),
            ("model", raw.model.is_some()),
            ("noise", raw.noise.is_some()),
            ("sweep", raw.sweep.is_some()),
            ("schemes", raw.schemes.is_some()),
            ("sdr", raw.sdr.is_some()),
        ];
        if let Some((key, _)) = fixed.iter().find(|(_, set)| *set) {
            return Err(bad(format!(
                "`{key}` is fixed by the {} preset; only seed, trials, output and format may be set",
                experiment.name()
            )));
        }
        return Ok(cfg);
    }

    if let Some(p) = raw.params {
        apply_params(&mut cfg.base, p)?;
    }
    if let Some(m) = raw.model {
        cfg.base.model = match m {
            RawModel::Awgn {} => ChannelModel::Awgn,
            RawModel::Rayleigh {} => ChannelModel::Rayleigh,
            RawModel::Ricean { k } => {
                if !(k >= 0.0 && k.is_finite()) {
                    return Err(bad(format!("model.k must be finite and non-negative, got {k}")));
                }
                ChannelModel::ricean(k).map_err(|e| bad(e.to_string()))?
            }
        };
    }
    if let Some(n) = raw.noise {
        cfg.base.noise = match n {
            RawNoise::Iid {} => NoiseSpec::Iid,
            RawNoise::Exponential { rho } => {
                if !(0.0..1.0).contains(&rho) {
                    return Err(bad(format!("noise.rho must lie in [0, 1), got {rho}")));
                }
                if !matches!(experiment, Experiment::Montecarlo | Experiment::Schemes) {
                    return Err(bad(format!(
                        "correlated noise only applies to montecarlo and schemes, not {}",
                        experiment.name()
                    )));
                }
                if cfg.base.gamma_s.is_infinite() {
                    return Err(bad("correlated noise needs a finite gamma_s_db"));
                }
                NoiseSpec::Exponential { rho }
            }
        };
    }

    cfg.sweep = match raw.sweep {
        Some(s) => Some(validate_sweep(s, experiment, &cfg.base)?),
        None if experiment.needs_sweep() => {
            return Err(bad(format!("{} needs a [sweep] table", experiment.name())))
        }
        None => None,
    };

    cfg.schemes = match raw.schemes {
        Some(list) => {
            if !matches!(experiment, Experiment::Montecarlo | Experiment::Schemes) {
                return Err(bad(format!("`schemes` has no effect on {}", experiment.name())));
            }
            if list.is_empty() {
                return Err(bad("schemes must not be empty"));
            }
            let mut out = Vec::new();
            for s in &list {
                let scheme = SchemeName::parse(s).ok_or_else(|| bad(format!("unknown scheme `{s}`")))?;
                if out.contains(&scheme) {
                    return Err(bad(format!("scheme `{s}` listed twice")));
                }
                out.push(scheme);
            }
            out
        }
        None => match experiment {
            Experiment::Montecarlo => vec![SchemeName::Uniform],
            Experiment::Schemes => vec![
                SchemeName::Uniform,
                SchemeName::Method1,
                SchemeName::Method2,
                SchemeName::Hybrid,
            ],
            _ => Vec::new(),
        },
    };
    if experiment == Experiment::Montecarlo && cfg.schemes.contains(&SchemeName::Hybrid) {
        return Err(bad("montecarlo does not support the hybrid scheme"));
    }

    if let Some(s) = raw.sdr {
        if !matches!(
            experiment,
            Experiment::SdrCompare | Experiment::Schemes | Experiment::Montecarlo
        ) {
            return Err(bad(format!("[sdr] has no effect on {}", experiment.name())));
        }
        if s.max_iter == Some(0) {
            return Err(bad("sdr.max_iter must be at least 1"));
        }
        cfg.sdr.max_iter = s.max_iter;
        if let Some(levels) = s.brute_levels {
            if levels < 2 {
                return Err(bad("sdr.brute_levels must be at least 2"));
            }
            cfg.sdr.brute_levels = levels;
        }
    }

    match experiment {
        Experiment::ExponentSweep => {
            if cfg.trials.is_some() {
                return Err(bad("trials has no effect on exponent-sweep"));
            }
        }
        Experiment::Montecarlo if cfg.trials_or(1000) < 1000 => {
            return Err(bad("montecarlo needs at least 1000 trials"));
        }
        _ => {}
    }
    Ok(cfg)
}

fn apply_params(base: &mut Base, p: RawParams) -> Result<(), CliError> {
    if let Some(l) = p.num_sensors {
        if l == 0 {
            return Err(bad("params.num_sensors must be at least 1"));
        }
        base.num_sensors = l;
    }
    match (p.num_antennas, p.antennas) {
        (Some(_), Some(_)) => return Err(bad("set either params.num_antennas or params.antennas, not both")),
        (Some(n), None) => base.antennas = vec![n],
        (None, Some(list)) => {
            if list.is_empty() {
                return Err(bad("params.antennas must not be empty"));
            }
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(bad("params.antennas must be strictly increasing"));
            }
            base.antennas = list;
        }
        (None, None) => {}
    }
    if base.antennas.contains(&0) {
        return Err(bad("antenna counts must be at least 1"));
    }
    if let Some(db) = p.gamma_s_db {
        if db.is_nan() || db == f64::NEG_INFINITY {
            return Err(bad("params.gamma_s_db must be a number or +inf"));
        }
        base.gamma_s = from_db(db);
    }
    if let Some(db) = p.gamma_c_db {
        if !db.is_finite() {
            return Err(bad("params.gamma_c_db must be finite"));
        }
        base.gamma_c = from_db(db);
    }
    if let Some(p1) = p.p1 {
        if !(p1 > 0.0 && p1 < 1.0) {
            return Err(bad(format!("params.p1 must lie in (0, 1), got {p1}")));
        }
        base.p1 = p1;
    }
    Ok(())
}

fn validate_sweep(s: RawSweep, experiment: Experiment, base: &Base) -> Result<Sweep, CliError> {
    let variable = Variable::parse(&s.variable).ok_or_else(|| {
        bad(format!(
            "unknown sweep variable `{}` (expected gamma_s, gamma_c, N, L, K or beta)",
            s.variable
        ))
    })?;
    if !experiment.variables().contains(&variable) {
        return Err(bad(format!(
            "{} cannot sweep `{}`",
            experiment.name(),
            s.variable
        )));
    }
    let grid = s.grid;
    if grid.is_empty() {
        return Err(bad("sweep.grid must not be empty"));
    }
    if grid.iter().any(|x| x.is_nan()) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad("sweep.grid must be sorted in strictly increasing order"));
    }
    let ok = |pred: &dyn Fn(f64) -> bool, what: &str| -> Result<(), CliError> {
        match grid.iter().find(|&&x| !pred(x)) {
            Some(x) => Err(bad(format!("sweep over {}: {what}, got {x}", s.variable))),
            None => Ok(()),
        }
    };
    match variable {
        Variable::GammaS => ok(&|x| x > f64::NEG_INFINITY, "values must be finite or +inf")?,
        Variable::GammaC => ok(&|x| x.is_finite(), "values must be finite")?,
        Variable::N | Variable::L => ok(
            &|x| x >= 1.0 && x.fract() == 0.0 && x <= 1e6,
            "values must be positive integers",
        )?,
        Variable::K => ok(
            &|x| x >= 0.0 && x.is_finite(),
            "values must be finite and non-negative",
        )?,
        Variable::Beta => ok(&|x| x > 0.0 && x.is_finite(), "values must be positive")?,
    }
    if variable == Variable::K && base.model == ChannelModel::Awgn {
        return Err(bad("cannot sweep K with an AWGN channel model"));
    }
    if variable == Variable::N && base.antennas.len() > 1 {
        return Err(bad("params.antennas conflicts with a sweep over N"));
    }
    if variable == Variable::GammaS
        && grid.iter().any(|x| x.is_infinite())
        && matches!(base.noise, NoiseSpec::Exponential { .. })
    {
        return Err(bad("correlated noise needs finite gamma_s values"));
    }
    Ok(Sweep { variable, grid })
}
