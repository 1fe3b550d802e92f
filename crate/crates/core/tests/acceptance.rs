//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when
//! any criterion fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::{Duration, Instant};

use korteweg::fit::log_times;
use korteweg::linalg::{CVec2, C};
use korteweg::linear::{default_decay_times, LINEAR_FIT_WINDOW};
use korteweg::model::Law;
use korteweg::quadrature::{default_t_samples, i0_report, i1_report, i2_report};
use korteweg::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn m_star() -> (FluidModel64, EquilibriumState64) {
    let m = make_adiabatic_model(1.0, 2.0, 10.0).expect("adiabatic model");
    let eq = make_equilibrium(&m, 1.0, 0.0).expect("M* equilibrium");
    (m, eq)
}

fn vdw_liquid() -> (FluidModel64, EquilibriumState64) {
    let m = make_vdw_model(3.0, 1.0 / 3.0, 8.0 / 3.0, 0.9, 10.0).expect("vdW model");
    let eq = make_equilibrium(&m, 0.5, 0.0).expect("liquid equilibrium");
    (m, eq)
}

fn timed(limit: Duration, body: impl FnOnce() -> Result<Outcome>) -> Outcome {
    let start = Instant::now();
    let out = body().unwrap_or_else(|e| Outcome {
        passed: false,
        detail: format!("error: {e}"),
    });
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    Outcome {
        passed: out.passed && in_time,
        detail: format!(
            "{} [{:.2} s, limit {} s{}]",
            out.detail,
            elapsed.as_secs_f64(),
            limit.as_secs(),
            if in_time { "" } else { ", over time" }
        ),
    }
}

fn structural() -> Result<Outcome> {
    let grid = default_xi_grid::<f64>();
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, (_, eq)) in [("M*", m_star()), ("vdW liquid", vdw_liquid())] {
        let coupling = genuine_coupling_check(&eq, &grid)?;
        let friedrichs = friedrichs_infeasibility(&eq);
        let cert = verify_coercivity(&eq, &grid)?;
        let theta_exact = cert.theta_bar == eq.mu_bar / (4.0 * eq.v_bar);
        let ok = coupling.coupled
            && friedrichs.nullity == 0
            && !friedrichs.symmetrizable
            && cert.max_deviation <= 1e-12
            && theta_exact;
        passed &= ok;
        parts.push(format!(
            "{name}: coupled={} nullity={} deviation={:.1e} theta={}",
            coupling.coupled, friedrichs.nullity, cert.max_deviation, cert.theta_bar
        ));
    }
    Ok(Outcome {
        passed,
        detail: parts.join("; "),
    })
}

fn dispersion_suite() -> Result<Outcome> {
    let grid = default_xi_grid::<f64>();
    let (_, eq) = m_star();
    let worst_re = dispersion_scan(&eq, &grid)
        .iter()
        .map(|d| {
            let target = -0.5 * d.xi * d.xi;
            let scale = target.abs().max(1.0);
            ((d.lambda_plus.re - target)
                .abs()
                .max((d.lambda_minus.re - target).abs()))
                / scale
        })
        .fold(0.0f64, f64::max);
    let scan = strict_dissipativity_scan(&eq, &grid)?;

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_identity = 0.0f64;
    let mut max_re = f64::NEG_INFINITY;
    for _ in 0..20 {
        let m = make_adiabatic_model(rng.gen_range(0.5..2.0), rng.gen_range(1.1..3.0), 10.0)?
            .with_viscosity(Law::Power {
                coeff: rng.gen_range(0.2..2.0),
                exponent: rng.gen_range(-1.0..1.0),
            })?
            .with_capillarity(Law::Power {
                coeff: rng.gen_range(0.2..2.0),
                exponent: rng.gen_range(-3.0..1.0),
            })?;
        let eq = make_equilibrium(&m, rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0))?;
        for d in dispersion_scan(&eq, &grid) {
            let (trace, det) = d.identity_residuals(&eq);
            worst_identity = worst_identity.max(trace).max(det);
            max_re = max_re.max(d.max_re());
        }
    }
    let passed = worst_re <= 1e-10
        && (scan.c - 0.5).abs() <= 1e-6
        && max_re < 0.0
        && worst_identity <= 1e-12;
    Ok(Outcome {
        passed,
        detail: format!(
            "Re lambda residual {worst_re:.1e}, c = {:.9}, random max Re lambda = {max_re:.3e}, identity residual {worst_identity:.1e}",
            scan.c
        ),
    })
}

fn envelope_suite() -> Result<Outcome> {
    let (_, eq) = m_star();
    let env = verify_pointwise_decay(&eq, &default_xi_grid(), &[0.1, 1.0, 10.0, 100.0])?;
    let all_ok = env.samples.iter().all(|s| s.ok);
    Ok(Outcome {
        passed: env.k >= 0.1 && env.c <= 10.0 && all_ok && env.weighted_certified,
        detail: format!(
            "k = {:.4}, C = {:.4}, weighted C = {:.4} certified={}",
            env.k, env.c, env.c_weighted, env.weighted_certified
        ),
    })
}

fn energy_suite() -> Result<Outcome> {
    let (_, eq) = m_star();
    let grid = default_xi_grid::<f64>();
    let params = select_delta(&eq, &grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let samples: Vec<CVec2<f64>> = (0..20)
        .map(|_| {
            let v: CVec2<f64> = [
                C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            ];
            let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
            [v[0] / n, v[1] / n]
        })
        .collect();
    let check = verify_energy_inequality(&eq, params.delta, &grid, &samples)?;
    let (lo, hi) = check.equivalence;
    let passed = params.c1 == 2.0
        && lo >= 0.5
        && hi <= 2.0
        && check.passed
        && check.k >= 0.1
        && check.max_residual <= 1e-12;
    Ok(Outcome {
        passed,
        detail: format!(
            "delta = {:.4}, C1 = {}, E/|V|^2 in [{lo:.4}, {hi:.4}], k = {:.4}, max residual {:.1e}",
            params.delta, params.c1, check.k, check.max_residual
        ),
    })
}

fn linear_decay() -> Result<Outcome> {
    let (_, eq) = m_star();
    let grid = SpectralGrid64::new(32768.0, 131072)?;
    let f = InitialData::gaussian(1.0, 1.0).sample(&grid)?;
    let trace = linear_decay_experiment(
        &eq,
        &grid,
        &f,
        &[0, 1, 2],
        &default_decay_times(),
        LINEAR_FIT_WINDOW,
    )?;
    let mut passed = true;
    let mut parts = Vec::new();
    for (ell, slope) in trace.ells.iter().zip(&trace.slopes) {
        let bound = -(*ell as f64 / 2.0 + 0.25) + 0.05;
        let s = slope.unwrap_or(f64::NAN);
        passed &= s <= bound;
        parts.push(format!("l={ell}: {s:.4} (<= {bound:.2})"));
    }
    Ok(Outcome {
        passed,
        detail: parts.join(", "),
    })
}

fn nonlinear_decay() -> Result<Outcome> {
    let (m, eq) = m_star();
    let grid = SpectralGrid64::new(400.0 * PI, 4096)?;
    let mut config = SimulationConfig::new(500.0);
    config.save_every = 100;
    let (big, small) = std::thread::scope(|s| {
        let a = s.spawn(|| simulate(&m, &eq, &grid, &InitialData::gaussian(1e-2, 5.0), &config));
        let b = s.spawn(|| simulate(&m, &eq, &grid, &InitialData::gaussian(1e-6, 5.0), &config));
        (
            a.join().expect("simulation thread"),
            b.join().expect("simulation thread"),
        )
    });
    let big = big?;
    let small = small?;
    let f = InitialData::gaussian(1e-6, 5.0).sample(&grid)?;
    let window = config.fit_window;
    let lin = linear_decay_experiment(
        &eq,
        &grid,
        &f,
        &[0],
        &log_times(window.0, window.1, 40),
        window,
    )?;
    let lin_slope = lin.slopes[0].unwrap_or(f64::NAN);
    let p_big = big.fitted_exponent.unwrap_or(f64::NAN);
    let p_small = small.fitted_exponent.unwrap_or(f64::NAN);
    let drift = big.mean_drift().max(small.mean_drift());
    let passed = big.passed && drift <= 1e-10 && (p_small - lin_slope).abs() <= 0.03;
    Ok(Outcome {
        passed,
        detail: format!(
            "eps=1e-2 exponent {p_big:.4}, mean drift {drift:.1e}, eps=1e-6 exponent {p_small:.4} vs linear {lin_slope:.4}, dt = {:.5}",
            big.dt
        ),
    })
}

fn integrator_order() -> Result<Outcome> {
    let (m, eq) = m_star();
    let grid = SpectralGrid64::new(100.0, 256)?;
    let f0 = InitialData::gaussian(1e-2, 5.0).sample(&grid)?;
    let solve = |dt: f64| -> Result<SpectralField64> {
        let integ = EtdIntegrator::new(&m, &eq, &grid, dt)?;
        let steps = (1.0 / dt).round() as usize;
        let mut f = f0.clone();
        for n in 0..steps {
            f = integ.step(&f, n as f64 * dt)?;
        }
        Ok(f)
    };
    let sols = [solve(0.2)?, solve(0.1)?, solve(0.05)?];
    let diff = |a: &SpectralField64, b: &SpectralField64| {
        SpectralField {
            v_hat: a.v_hat.iter().zip(&b.v_hat).map(|(x, y)| x - y).collect(),
            u_hat: a.u_hat.iter().zip(&b.u_hat).map(|(x, y)| x - y).collect(),
        }
        .state_norm(&grid, 0)
    };
    let order = (diff(&sols[0], &sols[1]) / diff(&sols[1], &sols[2])).log2();

    let lin0 = InitialData::gaussian(1e-8, 5.0).sample(&grid)?;
    let dt = korteweg::nonlinear::default_dt(&eq, &grid);
    let one = EtdIntegrator::new(&m, &eq, &grid, dt)?.step(&lin0, 0.0)?;
    let exact = semigroup_apply(&eq, &grid, &lin0, dt)?;
    let rel = diff(&one, &exact) / exact.state_norm(&grid, 0);
    Ok(Outcome {
        passed: order >= 3.5 && rel <= 1e-6,
        detail: format!(
            "self-convergence order {order:.3}, one-step linear relative error {rel:.1e}"
        ),
    })
}

fn appendix() -> Result<Outcome> {
    let mut failures = Vec::new();
    let eps = 4.0 * f64::EPSILON;
    let i0_exact = (0..4u32).all(|ell| {
        (i0(0.0, ell, 1.0).unwrap_or(f64::NAN) - 2.0 / (2 * ell + 1) as f64).abs() <= eps
    });
    if !i0_exact {
        failures.push("I0(0,l)".to_string());
    }
    let i2_big: f64 = i2(1e4)?;
    let i2_ok = ((i2_big - 5.2441) / 5.2441).abs() <= 0.02;
    if !i2_ok {
        failures.push(format!("I2(1e4) = {i2_big:.4}"));
    }
    let four_f = 4.0 * elliptic_f(FRAC_PI_2, -1.0)?;
    if (four_f - 5.2441).abs() > 1e-4 {
        failures.push(format!("4F = {four_f:.6}"));
    }
    let ts = default_t_samples::<f64>();
    let mut reports = Vec::new();
    for ell in 0..4 {
        for k in [0.5, 1.0, 2.0] {
            reports.push((format!("I0(l={ell},k={k})"), i0_report(&ts, ell, k)?));
        }
    }
    reports.push(("I1(c1=1)".to_string(), i1_report(&ts, 1.0)?));
    reports.push(("I2".to_string(), i2_report(&ts)?));
    let mut worst = (String::new(), 0.0f64);
    for (name, r) in &reports {
        let change = r.last_decade_change();
        if !r.sup.is_finite() || change >= 0.01 {
            failures.push(format!(
                "{name} sup {:.4} last-decade change {:.2}%",
                r.sup,
                100.0 * change
            ));
        }
        if change > worst.1 {
            worst = (name.clone(), change);
        }
    }
    let detail = format!(
        "I2(1e4) = {i2_big:.4} vs 5.2441, 4F(pi/2|-1) = {four_f:.6}, largest sup change {} {:.2}%{}",
        worst.0,
        100.0 * worst.1,
        if failures.is_empty() { String::new() } else { format!("; failing: {}", failures.join(", ")) }
    );
    Ok(Outcome {
        passed: failures.is_empty(),
        detail,
    })
}

fn main() {
    let criteria: Vec<(&str, u64, fn() -> Result<Outcome>)> = vec![
        ("structural suite", 5, structural),
        ("dispersion suite", 5, dispersion_suite),
        ("envelope suite", 30, envelope_suite),
        ("energy suite", 30, energy_suite),
        ("linear decay rates", 120, linear_decay),
        ("nonlinear decay", 600, nonlinear_decay),
        ("integrator order", 120, integrator_order),
        ("appendix suite", 60, appendix),
    ];
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (i, (name, limit, body)) in criteria.into_iter().enumerate() {
        let id = i + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let out = timed(Duration::from_secs(limit), body);
        println!(
            "{} {id} {name}: {}",
            if out.passed { "PASS" } else { "FAIL" },
            out.detail
        );
        if !out.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
