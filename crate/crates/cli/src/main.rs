use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use swarm_cli::runner;
use swarm_cli::CliError;

/// Swarm cohesion experiments: run scenarios, verify dispersion bounds.
#[derive(Parser)]
#[command(name = "swarm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario config and write its artifact directory.
    Run { config: PathBuf },
    /// Run every *.toml scenario in a directory and write summary.csv.
    Batch {
        dir: PathBuf,
        /// Max scenarios in flight (default: one per core).
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Check a whitespace-separated coupling matrix file.
    ValidateCoupling { matrix_file: PathBuf },
    /// Print lambda2, total weight, and dispersion bounds without simulating.
    Bounds { config: PathBuf },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Run { config } => {
            let outcome = runner::run_scenario(&config, &runner::out_root())?;
            print!("{}", outcome.report.to_text());
            println!("artifacts: {}", outcome.dir.display());
            Ok(0)
        }
        Command::Batch { dir, parallel } => {
            let rows = runner::run_batch(&dir, parallel, &runner::out_root())?;
            print!("{}", runner::summary_csv(&rows));
            let failed = rows.iter().filter(|r| !r.ok()).count();
            if failed > 0 {
                eprintln!("{failed} of {} scenarios failed", rows.len());
                Ok(1)
            } else {
                Ok(0)
            }
        }
        Command::ValidateCoupling { matrix_file } => {
            let (text, ok) = runner::validate_coupling_text(&matrix_file)?;
            print!("{text}");
            Ok(if ok { 0 } else { 3 })
        }
        Command::Bounds { config } => {
            print!("{}", runner::bounds_text(&config)?);
            Ok(0)
        }
    }
}
