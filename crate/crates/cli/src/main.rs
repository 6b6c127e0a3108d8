use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pingpong_cli::commands::{emit, load_scenario};
use pingpong_cli::{compare, run, sweep, CliError, Overrides};

/// Simulate ping-pong quantum key distribution under spectral attacks.
#[derive(Debug, Parser)]
#[command(name = "pingpong", version)]
struct Cli {
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the number of rounds.
    #[arg(long, global = true)]
    rounds: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one session and print its statistics as key = value lines.
    Run {
        scenario: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run one session per value of a scenario field and print a CSV table.
    Sweep {
        scenario: PathBuf,
        /// passband_half_width_nm, lambda_e_nm, control_prob or n
        #[arg(long)]
        field: String,
        /// Comma-separated values; may be empty.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the built-in protocol by attack by filter matrix as a CSV table.
    Compare {
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let overrides = Overrides {
        seed: cli.seed,
        rounds: cli.rounds,
    };
    match cli.command {
        Command::Run { scenario, output } => {
            let text = run(&load_scenario(&scenario)?, &overrides)?;
            emit(output.as_deref(), &text)
        }
        Command::Sweep {
            scenario,
            field,
            values,
            output,
        } => {
            let values: Vec<String> = values
                .into_iter()
                .filter(|v| !v.trim().is_empty())
                .collect();
            let text = sweep(&load_scenario(&scenario)?, &overrides, &field, &values)?;
            emit(output.as_deref(), &text)
        }
        Command::Compare { output } => emit(output.as_deref(), &compare(&overrides)?),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pingpong: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
