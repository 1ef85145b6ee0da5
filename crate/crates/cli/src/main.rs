//! `vwe`: runs mechanism experiments described by TOML configs and writes
//! their results as CSV.

mod config;
mod error;
mod output;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::Overrides;
use error::CliError;

#[derive(Parser)]
#[command(name = "vwe", version, about = "Voting-with-evidence experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// CSV destination (default: the config path with a .csv extension).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for Monte Carlo sampling; overrides the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Monte Carlo sample count; overrides the config.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Print a results CSV as an aligned table.
    Report { csv: PathBuf },
}

fn cmd_run(path: &Path, overrides: &Overrides) -> Result<String, CliError> {
    let start = Instant::now();
    let exp = config::load(path, overrides)?;
    let outcome = run::run(&exp)?;
    output::write_csv(&exp.output, &outcome.table)?;
    if let Some(text) = &outcome.weights_toml {
        let path = exp.output.with_extension("weights.toml");
        std::fs::write(&path, text).map_err(|e| CliError::Output { path, message: e.to_string() })?;
    }
    Ok(format!("{}: {} [{:.3}s]", exp.task.name(), outcome.summary, start.elapsed().as_secs_f64()))
}

fn cmd_report(path: &Path) -> Result<String, CliError> {
    output::render(path, output::read_csv(path)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, out, seed, samples } => {
            let overrides = Overrides { out: out.clone(), seed: *seed, samples: *samples };
            cmd_run(config, &overrides).map(|line| line + "\n")
        }
        Command::Report { csv } => cmd_report(csv),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
