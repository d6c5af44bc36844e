#![allow(clippy::type_complexity)]

mod commands;
mod manifest;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "nashmsy",
    version,
    about = "Risk-constrained multispecies Nash reference points"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML run configuration; without it the bundled dataset and defaults are used.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides `run.seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (overrides `manifest.output`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Number of rounds to run.
    #[arg(long, global = true)]
    pub rounds: Option<usize>,
    /// Posterior draws kept from the ensemble fit; later rounds are capped at this size.
    #[arg(long, global = true)]
    pub draws: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the built-in simulators over a scenario batch.
    Simulate {
        /// Scenario CSV (`scenario_id,F1..F9`); defaults to the round-1 design.
        #[arg(long)]
        scenarios: Option<PathBuf>,
    },
    /// Fit the ensemble model to the historical data.
    FitEnsemble,
    /// Fit the round-1 emulators and archive their hyperparameters.
    FitEmulator,
    /// Run the rounds and write every Nash candidate.
    NashSearch,
    /// Forecast prices and score scenarios by expected revenue.
    Revenue {
        /// Scenario CSV; defaults to the accepted scenarios of a pipeline run in `--out`.
        #[arg(long)]
        scenarios: Option<PathBuf>,
    },
    /// Full run: rounds, acceptance, revenue ranking and tables.
    Pipeline {
        /// Ignore checkpoints from an earlier run.
        #[arg(long)]
        fresh: bool,
    },
    /// Summarise a finished pipeline run.
    Report,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let validation = err.chain().any(|e| {
        e.downcast_ref::<nashmsy::Error>()
            .is_some_and(nashmsy::Error::is_validation)
            || e.downcast_ref::<manifest::ValidationError>().is_some()
    });
    if validation {
        2
    } else {
        1
    }
}

/// The error chain joined by `: `. Library errors already print their own
/// sources, so the walk stops at the first one.
fn describe(err: &anyhow::Error) -> String {
    let mut parts = Vec::new();
    for e in err.chain() {
        parts.push(e.to_string());
        if e.downcast_ref::<nashmsy::Error>().is_some() {
            break;
        }
    }
    parts.join(": ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let g = &cli.global;
    let result = match &cli.command {
        Command::Simulate { scenarios } => commands::simulate(g, scenarios.as_deref()),
        Command::FitEnsemble => commands::fit_ensemble(g),
        Command::FitEmulator => commands::fit_emulator(g),
        Command::NashSearch => commands::nash_search(g),
        Command::Revenue { scenarios } => commands::revenue(g, scenarios.as_deref()),
        Command::Pipeline { fresh } => commands::pipeline(g, *fresh),
        Command::Report => commands::report(g),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
