//! Experiment driver for constrained Markov potential games.
//!
//! Exit status: 0 on success, 2 when the problem or a policy is infeasible,
//! 1 for configuration and every other error.

mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::LevelFilter;

use cmpg::Error;
use config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "cmpg",
    version,
    about = "Run constrained Markov potential game experiments"
)]
struct Cli {
    /// Log verbosity: error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "info")]
    log_level: LevelFilter,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed; overrides the config's `seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let infeasible = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<Error>(),
            Some(Error::Infeasible | Error::InfeasibleGame(_) | Error::InfeasiblePolicy(_))
        )
    });
    if infeasible {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .init();
    let Command::Run { config, out, seed } = cli.command;
    let result = ExperimentConfig::load(&config).and_then(|mut cfg| {
        if seed.is_some() {
            cfg.seed = seed;
        }
        let dir = out
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("results"));
        pipeline::run(&cfg, &dir)
    });
    match result {
        Ok(a) => {
            println!("wrote {} to {}", a.files.join(", "), a.dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
