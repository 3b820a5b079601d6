//! `belltest`: CHSH Bell-test simulation, analysis and bias studies.
//!
//! Exit codes: 0 success, 1 validation error (bad arguments or malformed
//! input data), 2 I/O error.

mod commands;
mod config;
mod counts_io;
mod errors;
mod report;
mod sidecar;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use crate::errors::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "belltest",
    version,
    about = "Two-qubit CHSH Bell-test simulator and data-consistency analyzer"
)]
struct Cli {
    /// Output format for reports and summaries.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Override of the data-consistency validation tolerance (default 1e-9).
    #[arg(long, global = true)]
    tolerance: Option<f64>,

    /// Write the primary report to a file instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analyze a counts CSV file: Bell signal, crosstalk parameters, bounds
    /// and verdict.
    Analyze {
        /// Counts file (CSV: setting_x,setting_y,n_pp,n_pm,n_mp,n_mm).
        counts: PathBuf,
        /// Exact-state sidecar from `simulate`; attaches trace-norm errors to
        /// the report.
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Simulate an experiment from a config file; writes a counts CSV and an
    /// exact-state sidecar.
    Simulate {
        config: PathBuf,
        /// Counts output path (default: <config stem>.counts.csv).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sidecar output path (default: <counts stem>.sidecar.json).
        #[arg(long)]
        sidecar_out: Option<PathBuf>,
    },
    /// Maximize the measured Bell signal over the four settings' angles.
    Optimize { config: PathBuf },
    /// Optimize, then compare crosstalk parameters against trace-norm errors
    /// at the optimum.
    BiasStudy { config: PathBuf },
    /// Compute the corrected classical bound from a delta or eta table file.
    Bound {
        /// Delta table file (keys delta_a, delta_a_prime, delta_b,
        /// delta_b_prime); yields the heuristic 2 + delta_total.
        #[arg(long)]
        delta: Option<PathBuf>,
        /// Eta table file (keys eta_ab, eta_ab_prime, eta_a_prime_b,
        /// eta_a_prime_b_prime); yields the certified 2 + eta_total.
        #[arg(long)]
        eta: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Analyze { counts, sidecar } => commands::cmd_analyze(
            counts,
            sidecar.as_deref(),
            cli.format,
            cli.tolerance,
            &cli.output,
        ),
        Command::Simulate {
            config,
            out,
            sidecar_out,
        } => commands::cmd_simulate(config, out.clone(), sidecar_out.clone(), cli.format),
        Command::Optimize { config } => commands::cmd_optimize(config, cli.format, &cli.output),
        Command::BiasStudy { config } => commands::cmd_bias_study(config, cli.format, &cli.output),
        Command::Bound { delta, eta } => {
            commands::cmd_bound(delta.as_deref(), eta.as_deref(), cli.format, &cli.output)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            // clap renders help to stdout and errors to stderr.
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
