//! `jeans`: mode tables, single runs, the verification suite and parameter
//! sweeps for perturbations of the expanding dust-like background.
//!
//! Exit status is 0 on success, 1 when a check or a run fails and 2 for an
//! invalid configuration.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod modes;
mod output;
mod simulate;
mod sweep;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jeans::verify::{run_all, VerifyConfig, VerifyReport};
use serde::Serialize;

use config::{parse_list, Axis, CommonArgs, ConfigError, RunConfig};
use output::{emit, json, Metadata};

#[derive(Parser)]
#[command(name = "jeans", version, about = "Density perturbations of an expanding Newtonian fluid")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// CSV table of single Fourier modes: class, exponents, amplitudes.
    Modes(ModesArgs),
    /// One run from random data; JSON record plus snapshot CSV.
    Simulate(SimulateArgs),
    /// The full check suite as a JSON report.
    Verify(VerifyArgs),
    /// Independent runs along one parameter axis, one CSV row each.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct ModesArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma separated Laplacian eigenvalues; "" for none.
    #[arg(long, allow_hyphen_values = true)]
    lambdas: Option<String>,
    /// Comma separated sample times.
    #[arg(long)]
    times: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    snapshots: Option<usize>,
    /// Store every Fourier coefficient of each snapshot.
    #[arg(long)]
    dump_spectra: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Random seeds per (gamma, nonlinear) case.
    #[arg(long)]
    seeds: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum)]
    axis: Option<Axis>,
    /// Comma separated values along the axis; "" for none.
    #[arg(long, allow_hyphen_values = true)]
    values: Option<String>,
}

enum Failure {
    Config(String),
    Run(String),
    Io(std::io::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn list(flag: &str, s: &str) -> Result<Vec<f64>, Failure> {
    parse_list(s).map_err(|e| Failure::Config(format!("--{flag}: {e}")))
}

#[derive(Serialize)]
struct VerifyRecord<'a> {
    metadata: Metadata,
    report: &'a VerifyReport,
}

fn verify_config(cfg: &RunConfig) -> VerifyConfig {
    VerifyConfig {
        params: cfg.params,
        beta: cfg.beta,
        beta0: cfg.beta0,
        grid_n: cfg.grid.n,
        sobolev_s: cfg.sobolev_s,
        tau_min: cfg.tau_min(),
        seeds: cfg.verify.seeds,
        seed: cfg.seed,
        cs: cfg.cs,
        cm: cfg.cm,
        tol: cfg.tol,
    }
}

/// `true` when every check passed.
fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.cmd {
        Cmd::Modes(a) => {
            let mut cfg = RunConfig::load(&a.common)?;
            if let Some(s) = &a.lambdas {
                cfg.modes.lambdas = list("lambdas", s)?;
            }
            if let Some(s) = &a.times {
                cfg.modes.times = list("times", s)?;
            }
            let cfg = cfg.resolve()?;
            let table = modes::cmd_modes(&cfg).map_err(|e| Failure::Config(e.to_string()))?;
            emit(cfg.out.as_deref(), &table)?;
            Ok(true)
        }
        Cmd::Simulate(a) => {
            let mut cfg = RunConfig::load(&a.common)?;
            if let Some(n) = a.snapshots {
                cfg.simulate.snapshots = n;
            }
            if a.dump_spectra {
                cfg.simulate.dump_spectra = true;
            }
            let cfg = cfg.resolve()?;
            let rec = simulate::cmd_simulate(&cfg).map_err(|e| match e {
                jeans::Error::InvalidParameter { .. } => Failure::Config(e.to_string()),
                _ => Failure::Run(e.to_string()),
            })?;
            for note in &rec.advisories {
                eprintln!("warning: {note}");
            }
            emit(cfg.out.as_deref(), &json(&rec))?;
            if let Some(p) = &cfg.out {
                std::fs::write(p.with_extension("csv"), simulate::snapshot_table(&rec))?;
            }
            Ok(true)
        }
        Cmd::Verify(a) => {
            let mut cfg = RunConfig::load(&a.common)?;
            if let Some(n) = a.seeds {
                cfg.verify.seeds = n;
            }
            let cfg = cfg.resolve()?;
            let report = run_all(&verify_config(&cfg)).map_err(|e| Failure::Config(e.to_string()))?;
            for note in &report.advisories {
                eprintln!("warning: {note}");
            }
            for c in &report.checks {
                eprintln!("{}", c.line());
            }
            let rec = VerifyRecord {
                metadata: Metadata::new(&cfg),
                report: &report,
            };
            emit(cfg.out.as_deref(), &json(&rec))?;
            Ok(report.all_passed())
        }
        Cmd::Sweep(a) => {
            let mut cfg = RunConfig::load(&a.common)?;
            if a.axis.is_some() {
                cfg.sweep.axis = a.axis;
            }
            if let Some(s) = &a.values {
                cfg.sweep.values = list("values", s)?;
            }
            let cfg = cfg.resolve()?;
            let axis = cfg
                .sweep
                .axis
                .ok_or_else(|| Failure::Config("sweep needs an axis (--axis or sweep.axis)".into()))?;
            emit(cfg.out.as_deref(), &sweep::cmd_sweep(&cfg, axis))?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("run failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(e)) => {
            eprintln!("output error: {e}");
            ExitCode::from(1)
        }
    }
}
