//! `dpmix gen|learn|eval|audit --config <path> [--seed N] [--out DIR]`

mod audit;
mod context;
mod error;
mod eval;
mod gen;
mod learn;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use context::Context;
use error::CliError;

#[derive(Parser)]
#[command(name = "dpmix", version, about = "Private Gaussian mixture learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON config; relative paths inside it resolve against its directory.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Write zero for wall-clock fields so reruns are byte-identical.
    #[arg(long)]
    frozen_clock: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a dataset from a model spec.
    Gen(Common),
    /// Run the private learner.
    Learn(Common),
    /// TV distance between two model files.
    Eval(Common),
    /// Privacy, sensitivity or cover audit.
    Audit(Common),
}

fn set_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("DPMIX_THREADS") {
        let n: usize =
            v.parse().map_err(|_| CliError::Config(format!("DPMIX_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(CliError::Config("DPMIX_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    set_threads()?;
    let (common, f): (Common, fn(&Context) -> Result<(), CliError>) = match cli.command {
        Command::Gen(c) => (c, gen::run),
        Command::Learn(c) => (c, learn::run),
        Command::Eval(c) => (c, eval::run),
        Command::Audit(c) => (c, audit::run),
    };
    let ctx = Context::new(common.config, common.seed, common.out, common.frozen_clock)?;
    f(&ctx)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
