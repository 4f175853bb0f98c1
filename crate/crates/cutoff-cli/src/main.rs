//! `cutoff`: exponent tables for discrete channels, the duality check, and
//! cut-off rate curves for Ricean fading with and without side information.
//!
//! Exit status: 0 on success, 1 when a numerical check fails, 2 on usage or
//! validation errors.

mod commands;
mod grid;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use grid::Grid;

#[derive(Parser, Debug)]
#[command(name = "cutoff", version, about = "Gallager exponents and Ricean cut-off rate bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// E0 over a rho grid, R0, and the random-coding and sphere-packing
    /// exponents of a channel file.
    Dmc(DmcArgs),
    /// Compare the primal and dual maximisations on seeded random channels.
    VerifyDuality(DualityArgs),
    /// Lower and upper cut-off rate bounds for Ricean fading.
    Ricean(RiceanArgs),
    /// Cut-off rate bounds for Rayleigh fading with side information.
    Sideinfo(SideInfoArgs),
}

#[derive(clap::Args, Debug)]
struct DmcArgs {
    /// JSON file with `transition` and optional `cost` and `budget`.
    channel: PathBuf,
    #[arg(long, default_value = "lin:0.1:2:20")]
    rho_grid: Grid,
    /// Rates for the exponent curves; defaults to ten points up to
    /// log min(|X|, |Y|).
    #[arg(long)]
    rate_grid: Option<Grid>,
    /// Duality-gap tolerance of the optimiser.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Output file: CSV for `.csv`, JSON otherwise. CSV on stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct DualityArgs {
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..=64))]
    inputs: u64,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..=64))]
    outputs: u64,
    #[arg(long, default_value = "0.5,1")]
    rho_grid: Grid,
    /// Largest admissible primal/dual gap.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON report path; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Constraint {
    Average,
    Peak,
}

#[derive(clap::Args, Debug)]
struct RiceanArgs {
    #[arg(long, default_value = "0,1,2")]
    d_grid: Grid,
    #[arg(long, default_value = "log:1e6:1e14:5")]
    snr_grid: Grid,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    #[arg(long, value_enum, default_value_t = Constraint::Average)]
    constraint: Constraint,
    /// Fix the output-density parameter delta (requires --m1).
    #[arg(long, requires = "m1")]
    delta: Option<f64>,
    /// Fix the output-density parameter m1 (requires --delta).
    #[arg(long, requires = "delta")]
    m1: Option<f64>,
    /// Emit the second-order constants against d instead of SNR curves.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=1))]
    figure: Option<u8>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct SideInfoArgs {
    #[arg(long, default_value = "0.01,0.1,0.5,1")]
    eps2_grid: Grid,
    #[arg(long, default_value = "log:1e6:1e14:5")]
    snr_grid: Grid,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    #[arg(long, requires = "m1")]
    delta: Option<f64>,
    #[arg(long, requires = "delta")]
    m1: Option<f64>,
    /// Emit the second-order constants against eps2 instead of SNR curves.
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=2))]
    figure: Option<u8>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Dmc(a) => commands::dmc(&a),
        Command::VerifyDuality(a) => commands::verify_duality(&a),
        Command::Ricean(a) => commands::ricean(&a),
        Command::Sideinfo(a) => commands::sideinfo(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
