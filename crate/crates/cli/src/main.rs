use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use upin_cli::commands;
use upin_cli::config::{self, RunConfig};
use upin_cli::error::{CliError, CliResult};

/// Monte Carlo pricing of up-and-in barrier calls under rough stochastic
/// volatility, with short-maturity decay diagnostics.
#[derive(Parser)]
#[command(name = "upin", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Price European and up-and-in calls for one contract
    Price(CommonArgs),
    /// Scan maturities, fit decay rates, and emit charts
    Scan(CommonArgs),
    /// Run oracle-equivalence, dominance, and certificate checks
    Validate(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML config, or a manifest.json from a previous run
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo paths (overrides the config)
    #[arg(long)]
    paths: Option<usize>,
    /// Euler steps per path (overrides the config)
    #[arg(long)]
    steps: Option<usize>,
    /// Worker threads; 0 keeps the rayon default. Wall clock only, results
    /// are identical at any setting.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output directory for report.csv, manifest.json, and charts
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn load_config(args: &CommonArgs) -> CliResult<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => config::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    if let Some(paths) = args.paths {
        cfg.run.paths = paths;
    }
    if let Some(steps) = args.steps {
        cfg.run.steps = steps;
    }
    cfg.validate()?;
    if args.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.workers)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("worker pool: {e}")))?;
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> CliResult<ExitCode> {
    let args = match &cli.command {
        Command::Price(a) | Command::Scan(a) | Command::Validate(a) => a,
    };
    let config = load_config(args)?;
    match &cli.command {
        Command::Price(a) => {
            commands::price(&config, &a.out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Scan(a) => {
            commands::scan(&config, &a.out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate(a) => {
            if commands::validate(&config, &a.out)? {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("validation suite failed");
                Ok(ExitCode::from(3))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
