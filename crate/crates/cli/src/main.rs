//! `regchain`: simulate the regulated block-proposal game, sweep operating
//! points, locate thresholds and exercise the licensing primitives.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use config::{GameFlags, GridSpec};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "regchain", version, about = "Regulated consensus game simulator and analyzer")]
struct Cli {
    /// Worker threads for parallel trials (default: one per core)
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate gains and throughput at one operating point
    Simulate(SimulateArgs),
    /// Estimate gains over a grid of regulated shares
    Sweep(SweepArgs),
    /// Locate consensus-resource thresholds and run the exact checks
    Thresholds(ThresholdArgs),
    /// Issue and verify a rules announcement with licenses
    LicenseDemo(LicenseArgs),
    /// Statistical self-tests
    Selftest(SelftestArgs),
    /// Re-run the computation recorded in a manifest
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct OutputFlags {
    /// CSV destination (default: stdout)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Manifest destination (default: <out>.manifest.json when --out is set)
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Regulated share of the consensus resource
    #[arg(long = "alpha-r", value_name = "A")]
    pub alpha_r: Option<f64>,
    #[command(flatten)]
    pub game: GameFlags,
    #[command(flatten)]
    pub output: OutputFlags,
    /// JSON-lines trace of the first episode
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Inclusive grid of regulated shares, start:stop:step
    #[arg(long = "alpha-grid", value_name = "START:STOP:STEP")]
    pub alpha_grid: Option<GridSpec>,
    #[command(flatten)]
    pub game: GameFlags,
    #[command(flatten)]
    pub output: OutputFlags,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    #[value(name = "h-ir")]
    HIr,
    #[value(name = "h-ocf-ir")]
    HOcfIr,
    #[value(name = "h-sr")]
    HSr,
    #[value(name = "poly-roots")]
    PolyRoots,
    #[value(name = "e3-check")]
    E3Check,
    /// h_IR for each game depth, as sweep-schema rows
    #[value(name = "hir-vs-e")]
    HirVsE,
    /// Smallest sufficient pay-forward fee at --alpha-r
    #[value(name = "min-ocf")]
    MinOcf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Exact dynamic programming or closed form
    Exact,
    /// Monte Carlo bisection over the deviation family
    Mc,
}

#[derive(Args, Debug)]
pub struct ThresholdArgs {
    #[arg(long, value_enum)]
    pub which: Which,
    #[arg(long, value_enum, default_value = "exact")]
    pub method: Method,
    /// Bracket width (default 1e-3 exact, 5e-3 Monte Carlo)
    #[arg(long)]
    pub tol: Option<f64>,
    /// Fee cap for h-ocf-ir and min-ocf
    #[arg(long = "rho-cap", default_value_t = 1.0)]
    pub rho_cap: f64,
    /// Game depths for hir-vs-e
    #[arg(long = "e-values", value_delimiter = ',', default_value = "3,4,5,6,7,8,10,15,20,30,50,100")]
    pub e_values: Vec<usize>,
    /// Regulated share for min-ocf
    #[arg(long = "alpha-r", value_name = "A")]
    pub alpha_r: Option<f64>,
    #[command(flatten)]
    pub game: GameFlags,
    /// CSV destination (default: stdout)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LicenseArgs {
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub jurisdictions: u64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub assets: u64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    pub executors: u64,
    /// Oversight window E in epochs
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub window: u64,
    /// Epoch e0 of the window root
    #[arg(long = "root-epoch", default_value_t = 0)]
    pub root_epoch: u64,
    #[arg(long, env = "REGCHAIN_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    /// Plain versus regulated mining attempt distributions
    Crypto,
}

#[derive(Args, Debug)]
pub struct SelftestArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    /// Mining runs per sample
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1000..))]
    pub samples: u64,
    /// Puzzle threshold 2^bits; success probability 2^(bits-256)
    #[arg(long = "target-bits", default_value_t = 248, value_parser = clap::value_parser!(u32).range(200..=254))]
    pub target_bits: u32,
    #[arg(long, env = "REGCHAIN_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    /// Manifest written by simulate or sweep
    pub manifest: PathBuf,
    /// CSV destination (default: stdout)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Compare against the recorded CSV and fail on any difference
    #[arg(long)]
    pub check: bool,
}

/// Usage line of a subcommand, for errors raised after parsing.
pub fn usage_of(sub: &str) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    cmd.find_subcommand_mut(sub).map(|c| c.render_usage().to_string()).unwrap_or_default()
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Thresholds(a) => commands::thresholds(&a),
        Command::LicenseDemo(a) => commands::license_demo(&a),
        Command::Selftest(a) => commands::selftest(&a),
        Command::Replay(a) => commands::replay(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
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
