//! `korteweg` command-line driver.
//!
//! Exit codes: 0 success, 1 runtime error, 2 model or equilibrium rejected,
//! 3 genuine coupling fails, 4 a check ran but did not pass.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde_json::json;

use commands::Cmd;
use config::{RunConfig, Validation};

#[derive(Parser)]
#[command(
    name = "korteweg",
    version,
    about = "Decay diagnostics for the Navier-Stokes-Korteweg system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (JSON); defaults to the adiabatic reference model.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Structural checks: genuine coupling, Friedrichs infeasibility, coercivity.
    Check,
    /// Dispersion relation and strict dissipativity.
    Dispersion,
    /// Pointwise decay envelope and energy inequality.
    Envelope,
    /// Exact linear evolution and fitted decay rates.
    LinearDecay,
    /// Nonlinear simulation with Sobolev norm tracking.
    Simulate,
    /// Time-weighted integrals and their suprema.
    Integrals,
    /// Every command above, run as parallel jobs.
    All,
}

impl Command {
    fn cmds(self) -> Vec<Cmd> {
        match self {
            Command::Check => vec![Cmd::Check],
            Command::Dispersion => vec![Cmd::Dispersion],
            Command::Envelope => vec![Cmd::Envelope],
            Command::LinearDecay => vec![Cmd::LinearDecay],
            Command::Simulate => vec![Cmd::Simulate],
            Command::Integrals => vec![Cmd::Integrals],
            Command::All => Cmd::ALL.to_vec(),
        }
    }
}

const EXIT_ERROR: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_COUPLING: u8 = 3;
const EXIT_CHECK: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    let core = err
        .downcast_ref::<Validation>()
        .map(|v| &v.0)
        .or_else(|| err.downcast_ref::<korteweg::Error>());
    match core {
        Some(korteweg::Error::NotGenuinelyCoupled { .. }) => EXIT_COUPLING,
        Some(_) if err.is::<Validation>() => EXIT_VALIDATION,
        Some(e) if e.is_validation() => EXIT_VALIDATION,
        _ => EXIT_ERROR,
    }
}

fn error_report(err: &anyhow::Error) -> serde_json::Value {
    let core = err
        .downcast_ref::<Validation>()
        .map(|v| &v.0)
        .or_else(|| err.downcast_ref::<korteweg::Error>());
    let mut report = json!({
        "error": core.map_or("runtime", |e| e.reason()),
        "message": format!("{err:#}"),
    });
    if let Some(korteweg::Error::NotGenuinelyCoupled { xi, vector }) = core {
        report["xi"] = json!(xi);
        report["vector"] = json!(vector);
    }
    report
}

#[derive(serde::Serialize)]
struct JobStatus {
    command: Cmd,
    passed: Option<bool>,
    exit_code: u8,
    error: Option<serde_json::Value>,
}

fn run(cli: &Cli) -> anyhow::Result<Vec<JobStatus>> {
    let cfg = RunConfig::load(cli.config.as_deref(), cli.seed)?;
    cfg.setup()?;
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    output::write_json(&cli.out.join("config.json"), &cfg)?;
    let cmds = cli.command.cmds();
    let results: Vec<anyhow::Result<bool>> = if cmds.len() == 1 {
        vec![cmds[0].run(&cfg, &cli.out)]
    } else {
        run_parallel(&cmds, &cfg, &cli.out)
    };
    let statuses = cmds
        .into_iter()
        .zip(results)
        .map(|(command, r)| match r {
            Ok(passed) => JobStatus {
                command,
                passed: Some(passed),
                exit_code: if passed || !cfg.checks { 0 } else { EXIT_CHECK },
                error: None,
            },
            Err(e) => JobStatus {
                command,
                passed: None,
                exit_code: exit_code(&e),
                error: Some(error_report(&e)),
            },
        })
        .collect::<Vec<_>>();
    if matches!(cli.command, Command::All) {
        output::write_json(&cli.out.join("summary.json"), &statuses)?;
    }
    Ok(statuses)
}

fn run_parallel(cmds: &[Cmd], cfg: &RunConfig, out: &Path) -> Vec<anyhow::Result<bool>> {
    let mut slots: Vec<Option<anyhow::Result<bool>>> = cmds.iter().map(|_| None).collect();
    rayon::scope(|s| {
        for (cmd, slot) in cmds.iter().zip(slots.iter_mut()) {
            s.spawn(move |_| *slot = Some(cmd.run(cfg, out)));
        }
    });
    slots
        .into_iter()
        .map(|r| r.expect("job finished"))
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
        {
            eprintln!(
                "{}",
                json!({ "error": "runtime", "message": e.to_string() })
            );
            return ExitCode::from(EXIT_ERROR);
        }
    }
    match run(&cli) {
        Ok(statuses) => {
            let mut code = 0;
            for st in &statuses {
                let name = st.command.stem();
                match (&st.error, st.passed) {
                    (Some(report), _) => eprintln!("{report}"),
                    (None, Some(true)) => println!("{name}: passed"),
                    (None, _) => println!("{name}: FAILED"),
                }
                if code == 0 {
                    code = st.exit_code;
                }
            }
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("{}", error_report(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn exit_codes() {
        let coupling = anyhow::Error::from(korteweg::Error::NotGenuinelyCoupled {
            xi: 1.0,
            vector: [1.0, 0.0],
        });
        assert_eq!(exit_code(&coupling), EXIT_COUPLING);
        let param = anyhow::Error::from(Validation(korteweg::Error::Parameter("x".into())));
        assert_eq!(exit_code(&param), EXIT_VALIDATION);
        let runtime = anyhow::Error::from(korteweg::Error::NonFinite { t: 1.0 });
        assert_eq!(exit_code(&runtime), EXIT_ERROR);
        assert_eq!(exit_code(&anyhow::anyhow!("io")), EXIT_ERROR);
    }

    #[test]
    fn coupling_report_carries_witness() {
        let e = anyhow::Error::from(korteweg::Error::NotGenuinelyCoupled {
            xi: 2.0,
            vector: [0.0, 1.0],
        });
        let r = error_report(&e);
        assert_eq!(r["error"], "not genuinely coupled");
        assert_eq!(r["xi"], 2.0);
    }
}
