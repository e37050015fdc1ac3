use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use growthlab_cli::{parse_config, run, Outcome, Subcommand};

#[derive(Clone, Copy, ValueEnum)]
enum Command {
    /// Trajectory CSV and a residual summary
    Simulate,
    /// Balanced-growth verdict checked against the theorem
    Verdict,
    /// The 12-cell classification matrix
    Classify,
    /// Upwind vs closed-form transport solution
    Pde,
    /// Convergence rate and half-life
    Timescale,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Simulate => Subcommand::Simulate,
            Command::Verdict => Subcommand::Verdict,
            Command::Classify => Subcommand::Classify,
            Command::Pde => Subcommand::Pde,
            Command::Timescale => Subcommand::Timescale,
        }
    }
}

/// Exit status: 0 ok, 1 operational error, 2 result contradicts the theorem.
#[derive(Parser)]
#[command(name = "growthlab", version, about = "Steady-state growth experiments")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Accepted for interface compatibility; every run is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = parse_config(&cli.config).and_then(|cfg| run(cli.command.into(), &cfg, &cli.out));
    match result {
        Ok(outcome) => {
            if let Outcome::Inconsistent(msg) = &outcome {
                eprintln!("growthlab: consistency violation: {msg}");
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("growthlab: {e:#}");
            ExitCode::FAILURE
        }
    }
}
