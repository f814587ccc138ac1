//! `vfie` command-line front-end.

mod commands;
mod config;
mod csv;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::Method;

#[derive(Debug, Parser)]
#[command(
    name = "vfie",
    version,
    about = "Solve nonlinear Volterra-Fredholm integral equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the configured problem and write the nodal solution as CSV.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `[output] path`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `[solver] method`.
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
    /// Print the derived iteration schedule and a-priori bounds without solving.
    Bound {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve a built-in problem in its reference configuration and compare with the
    /// published values.
    Table { builtin: String },
    /// Discretization error of a built-in problem under repeated grid halving.
    Convergence {
        builtin: String,
        #[arg(long)]
        levels: usize,
        #[arg(long, default_value_t = 25)]
        base: usize,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Problem(#[from] vfie::problem::ProblemError),
    #[error(transparent)]
    Discrete(#[from] vfie::discrete::DiscreteError),
    #[error("solver failed: {0}")]
    Solve(#[from] vfie::hybrid::SolveError),
    #[error("Newton solver failed: {0}")]
    Oracle(#[from] vfie::oracle::OracleError),
    #[error("assumption audit failed:\n  {}", .0.join("\n  "))]
    Audit(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_)
            | CliError::Read { .. }
            | CliError::Usage(_)
            | CliError::Problem(_)
            | CliError::Discrete(_) => 1,
            CliError::Solve(_) | CliError::Oracle(_) | CliError::Write { .. } => 2,
            CliError::Audit(_) => 3,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve {
            config,
            out,
            method,
        } => commands::solve(&config, out, method),
        Command::Bound { config } => commands::bound(&config),
        Command::Table { builtin } => commands::table(&builtin),
        Command::Convergence {
            builtin,
            levels,
            base,
        } => commands::convergence(&builtin, levels, base),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
