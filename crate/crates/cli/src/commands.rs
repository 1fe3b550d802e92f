//! Subcommand bodies. Each writes `<name>.csv`, `<name>.json` and
//! `plot_<name>.py` into the output directory and reports whether its checks
//! passed.

use std::path::Path;

use korteweg::fit::log_times;
use korteweg::quadrature::{default_t_samples, i0_report, i1_report, i2_limit, i2_report};
use korteweg::{
    default_xi_grid, dispersion_scan, elliptic_f, friedrichs_infeasibility, genuine_coupling_check,
    i0, i2, linear_decay_experiment, select_delta, simulate, strict_dissipativity_scan,
    unit_samples, verify_coercivity, verify_energy_inequality, verify_pointwise_decay,
    EquilibriumState64, IntegralReport64, SimulationConfig, SpectralGrid64,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{write_csv, write_json, write_plot, Cell};

/// Published value of the `I2` large-time limit.
pub const I2_LIMIT_REF: f64 = 5.2441;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cmd {
    Check,
    Dispersion,
    Envelope,
    LinearDecay,
    Simulate,
    Integrals,
}

impl Cmd {
    pub const ALL: [Cmd; 6] = [
        Cmd::Check,
        Cmd::Dispersion,
        Cmd::Envelope,
        Cmd::LinearDecay,
        Cmd::Simulate,
        Cmd::Integrals,
    ];

    /// File stem of the command's outputs.
    pub fn stem(self) -> &'static str {
        match self {
            Cmd::Check => "check",
            Cmd::Dispersion => "dispersion",
            Cmd::Envelope => "envelope",
            Cmd::LinearDecay => "linear_decay",
            Cmd::Simulate => "simulate",
            Cmd::Integrals => "integrals",
        }
    }

    pub fn run(self, cfg: &RunConfig, out: &Path) -> anyhow::Result<bool> {
        let passed = match self {
            Cmd::Check => check(cfg, out)?,
            Cmd::Dispersion => dispersion(cfg, out)?,
            Cmd::Envelope => envelope(cfg, out)?,
            Cmd::LinearDecay => linear_decay(cfg, out)?,
            Cmd::Simulate => run_simulation(cfg, out)?,
            Cmd::Integrals => integrals(cfg, out)?,
        };
        write_plot(out, self.stem())?;
        Ok(passed)
    }
}

const DISPERSION_HEADER: [&str; 7] = [
    "xi",
    "re_lambda_plus",
    "im_lambda_plus",
    "re_lambda_minus",
    "im_lambda_minus",
    "theta_bar",
    "coupled",
];

fn dispersion_table(eq: &EquilibriumState64, xi_grid: &[f64], path: &Path) -> anyhow::Result<()> {
    let points = dispersion_scan(eq, xi_grid);
    let coupled: Vec<bool> = xi_grid
        .par_iter()
        .map(|&xi| genuine_coupling_check(eq, &[xi]).map(|r| r.coupled))
        .collect::<korteweg::Result<_>>()?;
    let theta = eq.mu_bar / (4.0 * eq.v_bar);
    write_csv(
        path,
        &DISPERSION_HEADER,
        points.iter().zip(coupled).map(|(p, c)| {
            vec![
                Cell::Num(p.xi),
                Cell::Num(p.lambda_plus.re),
                Cell::Num(p.lambda_plus.im),
                Cell::Num(p.lambda_minus.re),
                Cell::Num(p.lambda_minus.im),
                Cell::Num(theta),
                Cell::Bool(c),
            ]
        }),
    )
}

fn check(cfg: &RunConfig, out: &Path) -> anyhow::Result<bool> {
    let (_, eq) = cfg.setup()?;
    let grid = default_xi_grid::<f64>();
    dispersion_table(&eq, &grid, &out.join("check.csv"))?;
    let coupling = genuine_coupling_check(&eq, &grid)?;
    let friedrichs = friedrichs_infeasibility(&eq);
    if !coupling.coupled {
        write_json(
            &out.join("check.json"),
            &json!({ "coupling": coupling, "friedrichs": friedrichs, "passed": false }),
        )?;
        coupling.clone().into_result()?;
    }
    let cert = verify_coercivity(&eq, &grid)?;
    let passed = coupling.coupled
        && friedrichs.nullity == 0
        && !friedrichs.symmetrizable
        && cert.max_deviation <= korteweg::symbol::COERCIVITY_TOL;
    write_json(
        &out.join("check.json"),
        &json!({
            "coupling": coupling,
            "friedrichs": friedrichs,
            "coercivity": {
                "theta_bar": cert.theta_bar,
                "matrix": cert.matrix.m,
                "min_margin": cert.min_margin,
                "max_deviation": cert.max_deviation,
            },
            "passed": passed,
        }),
    )?;
    Ok(passed)
}

fn dispersion(cfg: &RunConfig, out: &Path) -> anyhow::Result<bool> {
    let (_, eq) = cfg.setup()?;
    let grid = default_xi_grid::<f64>();
    dispersion_table(&eq, &grid, &out.join("dispersion.csv"))?;
    let scan = strict_dissipativity_scan(&eq, &grid)?;
    let identity = dispersion_scan(&eq, &grid)
        .iter()
        .map(|p| {
            let (a, b) = p.identity_residuals(&eq);
            a.max(b)
        })
        .fold(0.0f64, f64::max);
    let passed = scan.max_re_lambda < 0.0 && identity <= 1e-12;
    write_json(
        &out.join("dispersion.json"),
        &json!({
            "c": scan.c,
            "argmin_xi": scan.argmin_xi,
            "max_re_lambda": scan.max_re_lambda,
            "argmax_xi": scan.argmax_xi,
            "max_identity_residual": identity,
            "passed": passed,
        }),
    )?;
    Ok(passed)
}

fn envelope(cfg: &RunConfig, out: &Path) -> anyhow::Result<bool> {
    let (_, eq) = cfg.setup()?;
    let grid = default_xi_grid::<f64>();
    let env = verify_pointwise_decay(&eq, &grid, &cfg.envelope.t)?;
    write_csv(
        &out.join("envelope.csv"),
        &["xi", "t", "opnorm", "bound", "ok"],
        env.samples.iter().map(|s| {
            vec![
                Cell::Num(s.xi),
                Cell::Num(s.t),
                Cell::Num(s.opnorm),
                Cell::Num(s.bound),
                Cell::Bool(s.ok),
            ]
        }),
    )?;
    let params = select_delta(&eq, &grid)?;
    let samples = unit_samples(cfg.envelope.energy_samples, cfg.seed);
    let energy = verify_energy_inequality(&eq, params.delta, &grid, &samples)?;
    let passed = env.samples.iter().all(|s| s.ok) && env.weighted_certified && energy.passed;
    write_json(
        &out.join("envelope.json"),
        &json!({
            "C": env.c,
            "k": env.k,
            "C_weighted": env.c_weighted,
            "weighted_certified": env.weighted_certified,
            "ladder": env.ladder,
            "energy": {
                "delta": params.delta,
                "C1": params.c1,
                "k": energy.k,
                "uniform_k": energy.uniform_k,
                "binding_xi": energy.binding_xi,
                "max_residual": energy.max_residual,
                "equivalence": energy.equivalence,
                "passed": energy.passed,
            },
            "passed": passed,
        }),
    )?;
    Ok(passed)
}

fn linear_decay(cfg: &RunConfig, out: &Path) -> anyhow::Result<bool> {
    let (_, eq) = cfg.setup()?;
    let spec = &cfg.linear_decay;
    let grid = SpectralGrid64::new(spec.grid.length, spec.grid.n)?;
    let f = spec.init.sample(&grid)?;
    let times = log_times(spec.window.0, spec.window.1, spec.samples);
    let trace = linear_decay_experiment(&eq, &grid, &f, &spec.ells, &times, spec.window)?;
    let mut rows = Vec::new();
    for (i, &ell) in trace.ells.iter().enumerate() {
        let slope = trace.slopes[i].unwrap_or(f64::NAN);
        for (t, norm) in trace.times.iter().zip(&trace.norms[i]) {
            rows.push(vec![
                Cell::Num(*t),
                Cell::Int(ell.into()),
                Cell::Num(*norm),
                Cell::Num(slope),
            ]);
        }
    }
    write_csv(
        &out.join("linear_decay.csv"),
        &["t", "ell", "norm", "fit_slope"],
        rows,
    )?;
    let slopes: Vec<_> = trace
        .ells
        .iter()
        .zip(&trace.slopes)
        .map(|(&ell, slope)| {
            let predicted = -(f64::from(ell) / 2.0 + 0.25);
            let ok = slope.is_some_and(|s| s <= predicted + 0.05);
            json!({ "ell": ell, "slope": slope, "predicted": predicted, "passed": ok })
        })
        .collect();
    let passed = slopes.iter().all(|s| s["passed"] == true);
    write_json(
        &out.join("linear_decay.json"),
        &json!({ "window": trace.window, "slopes": slopes, "passed": passed }),
    )?;
    Ok(passed)
}

fn run_simulation(cfg: &RunConfig, out: &Path) -> anyhow::Result<bool> {
    let (model, eq) = cfg.setup()?;
    let grid = SpectralGrid64::new(cfg.grid.length, cfg.grid.n)?;
    let config = SimulationConfig {
        dt: cfg.time.dt,
        save_every: cfg.time.save_every,
        s: cfg.s,
        fit_window: cfg.fit_window,
        ..SimulationConfig::new(cfg.time.t_final)
    };
    let trace = simulate(&model, &eq, &grid, &cfg.init, &config)?;
    let lower = trace.norm_s_minus_1();
    write_csv(
        &out.join("simulate.csv"),
        &["t", "norm_s_minus_1", "norm_l2", "E_s", "triple"],
        (0..trace.times.len()).map(|i| {
            vec![
                Cell::Num(trace.times[i]),
                Cell::Num(lower[i]),
                Cell::Num(trace.norm_l2[i]),
                Cell::Num(trace.e_s[i]),
                Cell::Num(trace.triple[i]),
            ]
        }),
    )?;
    write_json(
        &out.join("simulate.json"),
        &json!({
            "fit_window": trace.fit_window,
            "fitted_exponent": trace.fitted_exponent,
            "passed": trace.passed,
            "dt": trace.dt,
            "s": trace.s,
            "mean_drift": trace.mean_drift(),
            "final_high_band": trace.high_band.last(),
        }),
    )?;
    Ok(trace.passed)
}

fn integrals(cfg: &RunConfig, out: &Path) -> anyhow::Result<bool> {
    let spec = &cfg.integrals;
    let ts = default_t_samples::<f64>();
    let mut reports: Vec<(String, IntegralReport64)> = Vec::new();
    for &ell in &spec.ells {
        for &k in &spec.k {
            reports.push((format!("I0_l{ell}_k{k}"), i0_report(&ts, ell, k)?));
        }
    }
    reports.push((format!("I1_c{}", spec.c1), i1_report(&ts, spec.c1)?));
    reports.push(("I2".to_string(), i2_report(&ts)?));
    write_csv(
        &out.join("integrals.csv"),
        &["name", "t", "value"],
        reports.iter().flat_map(|(name, r)| {
            r.t_samples
                .iter()
                .zip(&r.values)
                .map(move |(t, v)| vec![Cell::Text(name), Cell::Num(*t), Cell::Num(*v)])
        }),
    )?;

    let t_max = ts.iter().copied().fold(0.0, f64::max);
    let i2_t_max = i2(t_max)?;
    let i2_rel = (i2_t_max - I2_LIMIT_REF).abs() / I2_LIMIT_REF;
    let four_f = 4.0 * elliptic_f(std::f64::consts::FRAC_PI_2, -1.0)?;
    let i0_zero: Vec<f64> = spec
        .ells
        .iter()
        .map(|&l| i0(0.0, l, 1.0))
        .collect::<korteweg::Result<_>>()?;
    let i0_zero_ok = spec
        .ells
        .iter()
        .zip(&i0_zero)
        .all(|(&l, v)| (v - 2.0 / f64::from(2 * l + 1)).abs() <= 4.0 * f64::EPSILON);
    let stable = reports
        .iter()
        .all(|(_, r)| r.sup.is_finite() && r.last_decade_change() < 0.01);
    let passed = i0_zero_ok && stable && i2_rel <= 0.02 && (four_f - I2_LIMIT_REF).abs() <= 1e-4;

    let summary: Vec<_> = reports
        .iter()
        .map(|(name, r)| {
            json!({
                "name": name,
                "sup": r.sup,
                "limit": r.limit,
                "last_decade_change": r.last_decade_change(),
            })
        })
        .collect();
    write_json(
        &out.join("integrals.json"),
        &json!({
            "I2_limit_ref": I2_LIMIT_REF,
            "I2_limit_4F": i2_limit::<f64>()?,
            "elliptic_4F": four_f,
            "I2_t_max": t_max,
            "I2_at_t_max": i2_t_max,
            "I2_relative_error": i2_rel,
            "I0_at_zero": i0_zero,
            "suprema": summary,
            "passed": passed,
        }),
    )?;
    Ok(passed)
}
