//! `kgli` — batch frontend wiring the core modules into reproducible
//! end-to-end runs: field evolution, event sampling, evidence/Fisher
//! analysis, verification suites, and functional minimization.
//!
//! Every run reads one JSON config, takes an optional `--seed` override, and
//! writes its outputs plus a `run.json` manifest under `--out`. Exit codes:
//! 0 success, 2 usage/config error, 3 numeric failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod formats;
mod manifest;

use error::CliError;

#[derive(Parser)]
#[command(name = "kgli", version, about = "numerical laboratory for robust-inference functionals and the gauge-coupled Klein-Gordon equation")]
struct Cli {
    /// Print the on-disk file formats and exit.
    #[arg(long = "help-formats", global = false)]
    help_formats: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a complex field with the explicit 1+1D solver.
    Solve(CommonArgs),
    /// Draw detection events from a density field.
    Sample(CommonArgs),
    /// Evidence and Fisher information of a count dataset under a model.
    Analyze(CommonArgs),
    /// Run a named verification suite.
    Verify(CommonArgs),
    /// Minimize the density/action functional.
    Minimize(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed recorded in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "kgli-out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.help_formats {
        print!("{}", formats::FORMATS_HELP);
        return ExitCode::SUCCESS;
    }
    let command = match cli.command {
        Some(c) => c,
        None => {
            eprintln!("error: a subcommand is required (see --help)");
            return ExitCode::from(2);
        }
    };

    // KGLI_THREADS caps the data-parallel pool for the whole process
    let threads = std::env::var("KGLI_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok());
    kgli_core::exec::init_thread_cap(threads);

    let result = match &command {
        Command::Solve(args) => commands::solve::run(args_to_ctx(args)),
        Command::Sample(args) => commands::sample::run(args_to_ctx(args)),
        Command::Analyze(args) => commands::analyze::run(args_to_ctx(args)),
        Command::Verify(args) => commands::verify::run(args_to_ctx(args)),
        Command::Minimize(args) => commands::minimize::run(args_to_ctx(args)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub struct RunContext {
    pub config_path: PathBuf,
    pub seed_override: Option<u64>,
    pub out_dir: PathBuf,
}

fn args_to_ctx(args: &CommonArgs) -> RunContext {
    RunContext {
        config_path: args.config.clone(),
        seed_override: args.seed,
        out_dir: args.out.clone(),
    }
}

impl RunContext {
    pub fn prepare(&self) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.out_dir)
            .map_err(|e| CliError::numeric(format!("cannot create output dir: {e}")))
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}
