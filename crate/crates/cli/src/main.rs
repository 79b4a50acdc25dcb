mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use commands::Command;
use config::LoadedConfig;
use error::CliError;

/// Perturbation experiments for one quasi-energy of a Floquet operator.
#[derive(Debug, Parser)]
#[command(name = "floquet", version)]
struct Args {
    command: Command,
    /// TOML experiment config; the reference model when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn run(args: &Args) -> Result<Vec<PathBuf>, CliError> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads: must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    let loaded = LoadedConfig::load(args.config.as_deref())?;
    commands::run(args.command, &loaded, args.seed, &args.out)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("floquet {}: {e}", args.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
