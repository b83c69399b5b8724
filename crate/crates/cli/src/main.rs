//! `fraclap <command> --config run.json --out dir/ [--seed k] [--threads t]`
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical contract or
//! tolerance violation, 3 I/O error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use fraclap_core::Error;

use crate::config::{ConfigError, RunConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Norms,
    FraclapCheck,
    KernelCheck,
    SolveWos,
    SolveGalerkin,
    SolveBallQuadrature,
    Compare,
    AnnulusDecay,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Norms => "norms",
            Command::FraclapCheck => "fraclap-check",
            Command::KernelCheck => "kernel-check",
            Command::SolveWos => "solve-wos",
            Command::SolveGalerkin => "solve-galerkin",
            Command::SolveBallQuadrature => "solve-ball-quadrature",
            Command::Compare => "compare",
            Command::AnnulusDecay => "annulus-decay",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fraclap", version, about = "Fractional Dirichlet problem solvers and checks")]
struct Cli {
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) => Failure::Numerical(e.to_string()),
            Error::Io(_) => Failure::Io(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(violations) if violations.is_empty() => ExitCode::SUCCESS,
        Ok(violations) => {
            for v in &violations {
                eprintln!("tolerance violated: {v}");
            }
            ExitCode::from(2)
        }
        Err(f) => {
            eprintln!("fraclap: {f}");
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: &Cli) -> Result<Vec<String>, Failure> {
    let start = Instant::now();
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| Failure::Io(format!("{}: {e}", cli.config.display())))?;
    let mut cfg: RunConfig =
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", cli.config.display())))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Config(e.to_string()))?;
    }
    let result = match cfg.dim {
        2 => commands::run::<2>(&cfg.validate::<2>(cli.command)?)?,
        3 => commands::run::<3>(&cfg.validate::<3>(cli.command)?)?,
        d => return Err(Failure::Config(format!("dimension {d} is not supported (use 2 or 3)"))),
    };
    let violations = result.violations.clone();
    output::write(&cli.out, cli.command, &cfg, result, start.elapsed().as_secs_f64())?;
    Ok(violations)
}
