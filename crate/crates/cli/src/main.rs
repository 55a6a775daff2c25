//! `kawahara-lab <experiment> --config path.json [--set key=value]... [--out dir]`
//!
//! Exit status: 0 on success, 2 for configuration errors, 3 when a numerical
//! invariant fails, 1 for anything else (I/O).

mod config;
mod experiments;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use kawahara_core::{io, Error, Exec};
use serde_json::json;

use config::ExperimentName;
use experiments::Prepared;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Invariant(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Invariant(_) => 3,
            Failure::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Invariant(m) => write!(f, "invariant violated: {m}"),
            Failure::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidParameter { .. }
            | Error::SpecMismatch
            | Error::NonFiniteMultiplier { .. }
            | Error::CostCap { .. }
            | Error::Parse(_)
            | Error::Json(_) => Failure::Config(msg),
            Error::Invariant { name, .. } => Failure::Invariant(format!("{name}: {msg}")),
            Error::NonFinite { .. } => Failure::Invariant(format!("finite_state: {msg}")),
            Error::BlowUp { .. } => Failure::Invariant(format!("blowup_guard: {msg}")),
            Error::NoConvergence { .. } => Failure::Invariant(format!("stage_convergence: {msg}")),
            Error::UnexpectedResonance { .. } => Failure::Invariant(format!("resonance_guard: {msg}")),
            Error::ZeroDenominator(_) => Failure::Invariant(format!("nonzero_denominator: {msg}")),
            Error::NonUniformGrid { .. } => Failure::Invariant(format!("uniform_grid: {msg}")),
            Error::Io(_) => Failure::Runtime(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "kawahara-lab",
    version,
    about = "Experiment driver for the periodic Kawahara equation"
)]
struct Cli {
    experiment: ExperimentName,
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Override a config leaf by dotted path, e.g. `params.K=64`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output directory (overrides `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Execution policy of the data-parallel kernels.
    #[arg(long, value_enum, default_value = "parallel")]
    exec: ExecArg,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum ExecArg {
    Sequential,
    Parallel,
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = config::load(cli.experiment, &cli.config, &cli.sets, cli.out.as_deref())?;
    let prepared = Prepared::parse(&cfg)?;
    let exec = match cli.exec {
        ExecArg::Sequential => Exec::Sequential,
        ExecArg::Parallel => Exec::Parallel,
    };
    std::fs::create_dir_all(&cfg.out_dir)?;
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    // written before any computation so a crash leaves the inputs behind
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": cfg.name.as_str(),
        "seed": cfg.seed,
        "out_dir": cfg.out_dir,
        "exec": format!("{:?}", exec).to_lowercase(),
        "params": prepared.resolved(),
        "started_unix": started,
    });
    io::write_json(&cfg.out_dir.join("manifest.json"), &manifest)?;
    let outcome = prepared.run(cfg.seed, &cfg.out_dir, exec)?;
    let status = if outcome.violation.is_some() {
        "invariant_violation"
    } else {
        "ok"
    };
    let summary = json!({
        "experiment": cfg.name.as_str(),
        "status": status,
        "violation": outcome.violation,
        "result": outcome.summary,
    });
    io::write_json(&cfg.out_dir.join("summary.json"), &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
    match outcome.violation {
        Some(v) => Err(Failure::Invariant(v)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("kawahara-lab: {f}");
            ExitCode::from(f.code())
        }
    }
}
