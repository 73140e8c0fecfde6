//! Figure presets. Each fixes its operating points and reuses the generic
//! runners or the closed forms directly; only seed, trials, output and
//! format come from the config.

use macdet_core::allocation::SchemeChoice;
use macdet_core::detection::{empirical_exponent, mean_pe_over_channels};
use macdet_core::exponents::{
    bound_b, bound_c, e_awgn, e_csis1_numeric, e_nocsis, e_po1, gain_awgn, gain_csis_bound_nk, gain_nocsis,
    SnrPoint, ZetaFactor,
};
use macdet_core::{from_db, ChannelModel, Execution, NetworkParams, RandomSource};

use crate::config::{Config, Experiment, SchemeName, Sweep, Variable};
use crate::experiments::{schemes, Outcome};
use crate::output::Row;
use crate::CliError;

fn models() -> [(ChannelModel, &'static str); 3] {
    [
        (ChannelModel::Awgn, "AWGN"),
        (ChannelModel::Rayleigh, "Rayleigh"),
        (ChannelModel::Ricean { k: 1.0 }, "Ricean(K=1)"),
    ]
}

fn db_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

struct Rows<'a> {
    cfg: &'a Config,
    x_name: &'static str,
    rows: Vec<Row>,
}

impl Rows<'_> {
    fn push(&mut self, series: impl Into<String>, x: f64, value: f64, ci95: Option<f64>) {
        self.rows.push(Row {
            experiment: self.cfg.experiment.name().to_string(),
            series: series.into(),
            x_name: self.x_name.to_string(),
            x_value: x,
            value,
            ci95,
            seed: self.cfg.seed,
        });
    }

    fn done(self) -> Outcome {
        Outcome {
            rows: self.rows,
            nonconverged: 0,
        }
    }
}

pub fn run(cfg: &Config, exec: Execution) -> Result<Outcome, CliError> {
    match cfg.experiment {
        Experiment::Figure2 => figure2(cfg, exec),
        Experiment::Figure3 => figure3(cfg, exec),
        Experiment::Figure4 => figure4(cfg),
        Experiment::Figure5 => figure5(cfg),
        Experiment::Figure6 => figure6(cfg),
        Experiment::Figure7 => figure7(cfg),
        Experiment::Figure8 => figure8(cfg, exec),
        Experiment::Figure9 => figure9(cfg, exec),
        _ => unreachable!("not a figure"),
    }
}

/// `E_H[Pe|H]` of uniform gains for L = 1..15, N ∈ {2, 10}, AWGN,
/// Rayleigh and Ricean(K=1) at γ_s = γ_c = 0 dB.
fn figure2(cfg: &Config, exec: Execution) -> Result<Outcome, CliError> {
    let draws = cfg.trials_or(2000);
    let mut out = Rows {
        cfg,
        x_name: "L",
        rows: Vec::new(),
    };
    for l in 1..=15usize {
        for (m, (model, name)) in models().into_iter().enumerate() {
            for n in [2usize, 10] {
                let params = NetworkParams::from_snr(l, n, 1.0, 1.0, 0.5)?;
                let rng = RandomSource::new(cfg.seed, ((m as u64) << 8) | n as u64);
                let pe = mean_pe_over_channels(&params, model, &SchemeChoice::Uniform, draws, &rng, exec)?;
                out.push(format!("{name}(N={n})"), l as f64, pe, None);
            }
        }
    }
    Ok(out.done())
}

/// Empirical `−(1/L)·ln Pe|H` of uniform gains against L for AWGN and
/// Ricean(K=1), N ∈ {2, 10}.
fn figure3(cfg: &Config, exec: Execution) -> Result<Outcome, CliError> {
    let draws = cfg.trials_or(50);
    let grid = [10usize, 25, 50, 100, 150, 200];
    let mut curves = Vec::new();
    for (m, (model, name)) in models().into_iter().enumerate() {
        if model == ChannelModel::Rayleigh {
            continue;
        }
        for n in [2usize, 10] {
            let params = NetworkParams::from_snr(200, n, 1.0, 1.0, 0.5)?;
            let rng = RandomSource::new(cfg.seed, ((m as u64) << 8) | n as u64);
            let curve = empirical_exponent(&params, model, &SchemeChoice::Uniform, &grid, draws, &rng, exec)?;
            curves.push((format!("{name}(N={n})"), curve));
        }
    }
    let mut out = Rows {
        cfg,
        x_name: "L",
        rows: Vec::new(),
    };
    for (i, &l) in grid.iter().enumerate() {
        for (name, curve) in &curves {
            out.push(name.clone(), l as f64, curve.exponents[i], None);
        }
    }
    Ok(out.done())
}

/// Closed-form exponents against γ_s ∈ [0, 20] dB for N ∈ {1, 2, 10} with
/// AWGN and Ricean(K=1) no-CSIS channels at γ_c = 0 dB.
fn figure4(cfg: &Config) -> Result<Outcome, CliError> {
    let mut out = Rows {
        cfg,
        x_name: "gamma_s_db",
        rows: Vec::new(),
    };
    for g in db_grid(0.0, 20.0, 1.0) {
        for n in [1usize, 2, 10] {
            let pt = SnrPoint::new(from_db(g), 1.0, 0.5, 1.0, n)?;
            out.push(format!("E_AWGN(N={n})"), g, e_awgn(&pt), None);
            out.push(format!("E_NoCSIS(N={n},K=1)"), g, e_nocsis(&pt), None);
        }
    }
    Ok(out.done())
}

/// Single antenna: AWGN, optimal and phase-only Rayleigh, and Ricean no-CSIS
/// with K ∈ {10, 20}, against γ_s ∈ [0, 20] dB at γ_c = 0 dB.
fn figure5(cfg: &Config) -> Result<Outcome, CliError> {
    let mut out = Rows {
        cfg,
        x_name: "gamma_s_db",
        rows: Vec::new(),
    };
    let rayleigh = ChannelModel::Rayleigh;
    for g in db_grid(0.0, 20.0, 1.0) {
        let pt = SnrPoint::new(from_db(g), 1.0, 0.5, 0.0, 1)?;
        let params = NetworkParams::from_snr(200, 1, from_db(g), 1.0, 0.5)?;
        out.push("E_AWGN(1)", g, e_awgn(&pt), None);
        out.push("E_CSIS(1),Rayleigh", g, e_csis1_numeric(&params, &rayleigh), None);
        out.push("E_PO(1),Rayleigh", g, e_po1(&pt, ZetaFactor::rayleigh()), None);
        for k in [10.0, 20.0] {
            out.push(format!("E_NoCSIS(1,K={k})"), g, e_nocsis(&pt.with_k(k)), None);
        }
    }
    Ok(out.done())
}

/// Single antenna, Ricean(K=1): the full-CSIS optimum against the AWGN
/// exponent and the bounds B and C, γ_s ∈ [0, 20] dB at γ_c = 10 dB.
fn figure6(cfg: &Config) -> Result<Outcome, CliError> {
    let mut out = Rows {
        cfg,
        x_name: "gamma_s_db",
        rows: Vec::new(),
    };
    let model = ChannelModel::Ricean { k: 1.0 };
    let gamma_c = from_db(10.0);
    for g in db_grid(0.0, 20.0, 1.0) {
        let pt = SnrPoint::new(from_db(g), gamma_c, 0.5, 1.0, 1)?;
        let params = NetworkParams::from_snr(200, 1, from_db(g), gamma_c, 0.5)?;
        out.push("E_CSIS(1)", g, e_csis1_numeric(&params, &model), None);
        out.push("E_AWGN(1)", g, e_awgn(&pt), None);
        out.push("B(1,1)", g, bound_b(&pt), None);
        out.push("C(1,1)", g, bound_c(&pt), None);
    }
    Ok(out.done())
}

/// Antenna gains against N = 1..10 for K = 1 at γ_s = γ_c = 0 dB.
fn figure7(cfg: &Config) -> Result<Outcome, CliError> {
    let mut out = Rows {
        cfg,
        x_name: "N",
        rows: Vec::new(),
    };
    let zeta = ZetaFactor::from_model(&ChannelModel::Ricean { k: 1.0 });
    for n in 1..=10usize {
        let x = n as f64;
        let pt = SnrPoint::new(1.0, 1.0, 0.5, 1.0, n)?;
        out.push("gain_awgn", x, gain_awgn(&pt), None);
        out.push("gain_nocsis", x, gain_nocsis(&pt), None);
        out.push("gain_csis_bound_nk", x, gain_csis_bound_nk(n, 1.0, zeta), None);
        out.push("2zeta", x, 2.0 * zeta.value(), None);
        out.push("N", x, x, None);
    }
    Ok(out.done())
}

fn gamma_s_sweep(grid: Vec<f64>) -> Option<Sweep> {
    Some(Sweep {
        variable: Variable::GammaS,
        grid,
    })
}

/// Practical schemes for N ∈ {5, 50}, L = 200, K = 1, γ_c = 10 dB against
/// γ_s, with `E_CSIS(1)` and `C(5,1)`.
fn figure8(cfg: &Config, exec: Execution) -> Result<Outcome, CliError> {
    let mut run = cfg.clone();
    run.trials = Some(cfg.trials_or(20));
    run.base.num_sensors = 200;
    run.base.antennas = vec![5, 50];
    run.base.gamma_c = from_db(10.0);
    run.base.p1 = 0.5;
    run.base.model = ChannelModel::Ricean { k: 1.0 };
    run.sweep = gamma_s_sweep(db_grid(-10.0, 20.0, 2.5));
    run.schemes = vec![SchemeName::Method1, SchemeName::Method2, SchemeName::Hybrid];
    let mut out = schemes(&run, exec)?;
    out.rows.retain(|r| r.series != "C(50,1)");
    Ok(out)
}

/// Hybrid against the semidefinite relaxation and `C(N,K)` for a small
/// network (L = 16, N = 2, K = 1, γ_c = 10 dB) against γ_s.
fn figure9(cfg: &Config, exec: Execution) -> Result<Outcome, CliError> {
    let mut run = cfg.clone();
    run.trials = Some(cfg.trials_or(10));
    run.base.num_sensors = 16;
    run.base.antennas = vec![2];
    run.base.gamma_c = from_db(10.0);
    run.base.p1 = 0.5;
    run.base.model = ChannelModel::Ricean { k: 1.0 };
    run.sweep = gamma_s_sweep(db_grid(-10.0, 20.0, 5.0));
    run.schemes = vec![SchemeName::Hybrid, SchemeName::Sdr];
    let mut out = schemes(&run, exec)?;
    out.rows.retain(|r| r.series != "E_CSIS(1)");
    Ok(out)
}
