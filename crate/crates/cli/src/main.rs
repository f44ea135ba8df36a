//! `gp`: command-line driver for the Gross–Pitaevskii experiments.
//!
//! Exit codes: 0 success, 1 other failure, 2 configuration or input error,
//! 3 numerical non-convergence (partial outputs and manifest still written).

mod commands;
mod config;
mod format;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerics(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Config(_) => 2,
            Failure::Numerics(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numerics(m) | Failure::Other(m) => m,
        }
    }
}

impl From<gp_core::Error> for Failure {
    fn from(e: gp_core::Error) -> Self {
        use gp_core::Error as E;
        match e {
            E::FileFormat(_)
            | E::InvalidProfile(_)
            | E::OddSampleCount(_)
            | E::InvalidGrid(_)
            | E::InvalidArgument(_)
            | E::CriticalCouplingGuard { .. }
            | E::UnnormalizedInput { .. }
            | E::BoxTooSmall { .. } => {
                Failure::Config(e.to_string())
            }
            E::NonConvergence { .. } | E::BracketNotFound { .. } | E::InsufficientData { .. } => {
                Failure::Numerics(e.to_string())
            }
            _ => Failure::Other(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "gp", version, about = "Ground states of the 2D attractive Gross–Pitaevskii functional")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the Townes soliton and write its profile and identity table.
    Soliton {
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the energy breakdown of a stored field.
    Energy {
        #[arg(long)]
        field: PathBuf,
        /// Potential spec (`sinc`, `power_well h0=1 p=2`, ...) or a GPF1 file.
        #[arg(long)]
        potential: String,
        #[arg(long)]
        a: f64,
    },
    /// Minimize at one coupling.
    Minimize {
        #[arg(long)]
        potential: String,
        #[arg(long)]
        a: f64,
        #[arg(long = "L")]
        half_width: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long, default_value_t = 20_000)]
        max_iters: usize,
        /// Start from this GPF1 field instead of a Gaussian.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the minimizer as GPF1 next to `--out`.
        #[arg(long)]
        field: Option<String>,
    },
    /// Warm-started continuation sweep from a config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `out_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report the spectral gap condition for a potential.
    #[command(name = "check-v1")]
    CheckV1 {
        #[arg(long)]
        potential: String,
        #[arg(long = "L")]
        half_width: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Report whether `V * |u|²` attains its minimum for a stored field.
    #[command(name = "check-v2")]
    CheckV2 {
        #[arg(long)]
        potential: String,
        #[arg(long)]
        field: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
    },
    /// Sweep, align onto the soliton and fit the blow-up law.
    Blowup {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Soliton { tol, out } => commands::soliton(tol, &out),
        Command::Energy { field, potential, a } => commands::energy(&field, &potential, a),
        Command::Minimize {
            potential,
            a,
            half_width,
            n,
            tol,
            max_iters,
            init,
            out,
            field,
        } => commands::minimize(commands::MinimizeArgs {
            potential: &potential,
            a,
            half_width,
            n,
            tol,
            max_iters,
            init: init.as_deref(),
            out: &out,
            field: field.as_deref(),
        }),
        Command::Sweep { config, out } => commands::sweep(&config, out.as_deref()),
        Command::CheckV1 {
            potential,
            half_width,
            n,
            tol,
        } => commands::check_v1(&potential, half_width, n, tol),
        Command::CheckV2 { potential, field, eps } => commands::check_v2(&potential, &field, eps),
        Command::Blowup { config, profile, out } => commands::blowup(&config, &profile, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("gp: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
