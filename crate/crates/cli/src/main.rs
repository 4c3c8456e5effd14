use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use viana_cli::config::ExperimentConfig;
use viana_cli::run::{run_with_threads, Command, RunError};

/// Simulation and estimation lab for Viana-type skew products.
#[derive(Parser, Debug)]
#[command(name = "viana", version)]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    command: Command,
    /// Path to the experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `[output] directory`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed (overrides `[run] seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(&cli) {
        Ok(outcome) => {
            let mut out = std::io::stdout().lock();
            for (k, v) in &outcome.summary {
                // a closed pipe is not a failure of the experiment
                let _ = writeln!(out, "{k}={v}");
            }
            if let Some(reason) = &outcome.nonconvergence {
                eprintln!("viana: did not converge: {reason}");
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("viana: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

fn execute(cli: &Cli) -> Result<viana_cli::run::RunOutcome, RunError> {
    let text = std::fs::read_to_string(&cli.config).map_err(|source| RunError::Io {
        path: cli.config.clone(),
        source,
    })?;
    let mut config = ExperimentConfig::parse(&text)?;
    if let Some(seed) = cli.seed {
        config = config.with_seed(seed);
    }
    if let Some(out) = &cli.out {
        config = config.with_output_dir(out.clone());
    }
    let threads = cli.threads.unwrap_or_else(rayon::current_num_threads);
    run_with_threads(&config, cli.command, threads)
}
