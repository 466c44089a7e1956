//! Batch front end: exact spectra, frustration-elimination sweeps, quantum
//! trajectory runs, delay-line compilation and dark-state checks.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::RunConfig;

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const INVALID_RUN: i32 = 2;
    pub const INFEASIBLE: i32 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] cim_core::Error),
    #[error(transparent)]
    Quantum(#[from] cim_quantum::QuantumError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    /// The run finished but its result cannot be trusted.
    #[error("run invalid: {0}")]
    Invalid(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => exit::INVALID_RUN,
            CliError::Infeasible(_) => exit::INFEASIBLE,
            _ => exit::USAGE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cim", version, about = "Coherent Ising machine frustration-elimination toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Sweep samples or trajectory count.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Primary output file (stdout otherwise).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; output does not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Enumerate every configuration and list the energy levels.
    SolveExact,
    /// Integrate random initial conditions and classify the outcomes.
    Sweep,
    /// Quantum trajectories on the hyperspin network, scored against its dark state.
    Trajectory,
    /// Compile the coupling set into a multi-port delay-line schedule.
    CompileDelayline {
        /// Re-read the written schedule and compare the rebuilt channels.
        #[arg(long)]
        check: bool,
    },
    /// Evaluate every channel on a coherent assignment.
    CheckDark {
        /// Exit with the infeasibility status unless every channel is dark.
        #[arg(long)]
        require_dark: bool,
    },
}

impl Cli {
    /// Config file merged with the command-line overrides.
    pub fn resolved_config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        if self.samples.is_some() {
            cfg.samples = self.samples;
        }
        if self.out.is_some() {
            cfg.output.clone_from(&self.out);
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        if cfg.workers == Some(0) {
            return Err(CliError::Usage("workers must be at least 1".into()));
        }
        Ok(cfg)
    }
}

/// Parses `args` (program name first) and runs; returns the exit status.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return exit::USAGE;
            }
            let _ = write!(stdout, "{}", e.render());
            return exit::OK;
        }
    };
    let result = cli.resolved_config().and_then(|cfg| commands::dispatch(&cli.command, &cfg, stdout, stderr));
    match result {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
