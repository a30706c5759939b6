use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lieosc::experiment::runner::{default_out_dir, run_config};

#[derive(Parser)]
#[command(name = "lieosc", version, about = "Oscillating multipliers on compact Lie groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config path with extension `.out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Round trip and Plancherel check on random band-limited functions.
    Plancherel(RunArgs),
    /// Applies a multiplier to a test function and checks symbol decay.
    Multiplier(RunArgs),
    /// Synthesises a kernel and optionally fits its envelope slope.
    Kernel(RunArgs),
    /// Estimates the kernel seminorm over a grid of radii.
    Seminorm(RunArgs),
    /// Calderón–Zygmund decomposition at a list of altitudes.
    Czd(RunArgs),
    /// Weak-(1,1) ratio sweep.
    Weak11(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Plancherel(a) => ("plancherel", a),
        Command::Multiplier(a) => ("multiplier", a),
        Command::Kernel(a) => ("kernel", a),
        Command::Seminorm(a) => ("seminorm", a),
        Command::Czd(a) => ("czd", a),
        Command::Weak11(a) => ("weak11", a),
    };
    let out = args.out.clone().unwrap_or_else(|| default_out_dir(&args.config));
    match run_config(&args.config, &out, args.seed, Some(kind)) {
        Ok(outcome) => {
            println!("{}", serde_json::to_string_pretty(&outcome.report).unwrap_or_default());
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: a decomposition property failed; see {}", out.join("properties.csv").display());
                ExitCode::from(4)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
