//! `gnslab`: verification runs and parameter sweeps for trapped 1D bosons
//! with two- and three-body interactions.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use toml::Value;

use gnslab_core::par::Exec;
use gnslab_core::solver::FunctionalKind;

use commands::Context;
use config::{parse_override_value, RunConfig};
use error::CliError;
use output::RunDir;

/// Environment variable overriding the worker count.
const WORKERS_ENV: &str = "GNSLAB_WORKERS";

#[derive(Parser, Debug)]
#[command(name = "gnslab", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; every key is optional.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,

    /// Override any key, e.g. `--set grid.M=4096 --set model.b=0.9bcrit`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Two-body coupling (phase-diagram: comma-separated list).
    #[arg(long, global = true, allow_hyphen_values = true)]
    a: Option<String>,

    /// Three-body coupling, a number or a multiple like `1.05bcrit`
    /// (phase-diagram: comma-separated list).
    #[arg(long, global = true)]
    b: Option<String>,

    /// Trap exponent.
    #[arg(long, global = true)]
    s: Option<f64>,

    /// Grid half-width of the block used by the subcommand.
    #[arg(long = "L", global = true)]
    half_width: Option<f64>,

    /// Grid points of the block used by the subcommand.
    #[arg(long = "M", global = true, allow_hyphen_values = true)]
    points: Option<i64>,

    /// Particle number (manybody-ed, compare: comma-separated list).
    #[arg(long = "N", global = true)]
    particles: Option<String>,

    /// Collapse regime parameter.
    #[arg(long, global = true)]
    zeta: Option<f64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (0 = available parallelism); overrides $GNSLAB_WORKERS.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Certify the closed-form constants of Q0 and the translation inequality.
    GnsVerify,
    /// Minimize the cubic-quintic NLS functional.
    NlsSolve,
    /// Minimize the Hartree functional at particle number model.N.
    HartreeSolve,
    /// Classify an (a, b) scan into minimizer, collapse and marginal cells.
    PhaseDiagram,
    /// Follow minimizers along a collapse regime.
    CollapseSweep,
    /// Exact diagonalization against the restricted Hartree energy.
    ManybodyEd,
    /// Hartree versus NLS energies as N grows.
    Compare,
    /// Print the resolved configuration and exit.
    PrintConfig,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::GnsVerify => "gns-verify",
            Command::NlsSolve => "nls-solve",
            Command::HartreeSolve => "hartree-solve",
            Command::PhaseDiagram => "phase-diagram",
            Command::CollapseSweep => "collapse-sweep",
            Command::ManybodyEd => "manybody-ed",
            Command::Compare => "compare",
            Command::PrintConfig => "print-config",
        }
    }

    /// Config block whose `L`/`M` keys the `--L`/`--M` flags address.
    fn grid_keys(self) -> (&'static str, &'static str) {
        match self {
            Command::PhaseDiagram => ("phase.L", "phase.M"),
            Command::CollapseSweep => ("regime.reference_L", "regime.reference_M"),
            Command::ManybodyEd => ("ed.L", "ed.M"),
            Command::Compare => ("compare.L", "compare.M"),
            _ => ("grid.L", "grid.M"),
        }
    }
}

fn list_value(raw: &str) -> Value {
    Value::Array(raw.split(',').map(|v| parse_override_value(v.trim())).collect())
}

fn overrides(cli: &Cli) -> Result<Vec<(String, Value)>, CliError> {
    let mut out = Vec::new();
    let cmd = cli.command;
    if let Some(a) = &cli.a {
        match cmd {
            Command::PhaseDiagram => out.push(("phase.a".into(), list_value(a))),
            _ => out.push(("model.a".into(), parse_override_value(a))),
        }
    }
    if let Some(b) = &cli.b {
        match cmd {
            Command::PhaseDiagram => out.push(("phase.b".into(), list_value(b))),
            _ => out.push(("model.b".into(), parse_override_value(b))),
        }
    }
    if let Some(s) = cli.s {
        out.push(("model.s".into(), Value::Float(s)));
    }
    let (lk, mk) = cmd.grid_keys();
    if let Some(l) = cli.half_width {
        out.push((lk.into(), Value::Float(l)));
    }
    if let Some(m) = cli.points {
        out.push((mk.into(), Value::Integer(m)));
    }
    if let Some(n) = &cli.particles {
        match cmd {
            Command::ManybodyEd => out.push(("ed.N".into(), list_value(n))),
            Command::Compare => out.push(("compare.N".into(), list_value(n))),
            _ => out.push(("model.N".into(), parse_override_value(n))),
        }
    }
    if let Some(z) = cli.zeta {
        out.push(("regime.zeta".into(), Value::Float(z)));
    }
    if let Some(o) = &cli.out {
        out.push(("output".into(), Value::String(o.display().to_string())));
    }
    if let Some(w) = cli.workers {
        out.push(("workers".into(), Value::Integer(w as i64)));
    } else if let Ok(w) = std::env::var(WORKERS_ENV) {
        let w: i64 = w
            .trim()
            .parse()
            .map_err(|_| CliError::config("workers", format!("${WORKERS_ENV} = `{w}` is not an integer")))?;
        out.push(("workers".into(), Value::Integer(w)));
    }
    if let Some(seed) = cli.seed {
        out.push(("seed".into(), Value::Integer(seed as i64)));
    }
    for raw in &cli.overrides {
        let (key, value) = raw
            .split_once('=')
            .ok_or_else(|| CliError::config(raw, "expected KEY=VALUE"))?;
        out.push((key.trim().to_string(), parse_override_value(value.trim())));
    }
    // Integer-valued floats from the command line deserialize fine either way;
    // the conversion below keeps `--set grid.L=20` from being rejected.
    for (key, value) in &mut out {
        if FLOAT_KEYS.contains(&key.as_str()) {
            if let Value::Integer(i) = value {
                *value = Value::Float(*i as f64);
            }
        }
    }
    Ok(out)
}

/// Keys whose TOML type is a float; integer literals are widened.
const FLOAT_KEYS: &[&str] = &[
    "grid.L",
    "model.s",
    "model.alpha",
    "model.beta",
    "model.N",
    "kernel.sigma_two",
    "kernel.sigma_three",
    "solver.tolerance",
    "solver.tau0",
    "solver.kinetic_ceiling",
    "solver.init_width",
    "phase.L",
    "regime.zeta",
    "regime.c",
    "regime.p",
    "regime.correction_d",
    "regime.correction_q",
    "regime.reference_L",
    "regime.eta",
    "regime.hartree_L",
    "ed.L",
    "ed.tolerance",
    "compare.L",
];

fn setup_workers(workers: usize) -> usize {
    let threads = if workers == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        workers
    };
    #[cfg(feature = "parallel")]
    {
        // A second initialization only fails if a pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    threads
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    let overrides = overrides(cli)?;
    let config = RunConfig::load(cli.config.as_deref(), &overrides)?;
    let resolved = config.to_toml();
    if cli.command == Command::PrintConfig {
        print!("{resolved}");
        return Ok(0);
    }
    let workers = setup_workers(config.workers);
    let exec = if workers > 1 { Exec::default() } else { Exec::Sequential };
    let mut out = RunDir::create(&config.output, &resolved)?;
    let ctx = Context { config, exec };
    let result = match cli.command {
        Command::GnsVerify => commands::gns_verify(&ctx, &mut out),
        Command::NlsSolve => commands::solve(&ctx, FunctionalKind::Nls, &mut out),
        Command::HartreeSolve => commands::solve(&ctx, FunctionalKind::Hartree, &mut out),
        Command::PhaseDiagram => commands::phase(&ctx, &mut out),
        Command::CollapseSweep => commands::collapse(&ctx, &mut out),
        Command::ManybodyEd => commands::manybody(&ctx, &mut out),
        Command::Compare => commands::compare(&ctx, &mut out),
        Command::PrintConfig => unreachable!("handled above"),
    };
    for f in out.failures() {
        eprintln!("assertion failed: {f}");
    }
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    let code = out.finish(cli.command.name(), workers, result.as_ref().err())?;
    println!("{}: {}", cli.command.name(), if code == 0 { "ok" } else { "failed" });
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
