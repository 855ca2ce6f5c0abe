use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use regpath_cli::{cmd_check, cmd_solve, cmd_table, CheckOptions, Overrides, SolveArgs, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "regpath", version, about = "Certified regularization-path solver for monotone inclusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Tuning {
    /// Operator-evaluation budget.
    #[arg(long)]
    max_evals: Option<u64>,
    /// Stop once this epoch is reached.
    #[arg(long)]
    target_mu: Option<u64>,
    /// sqrt[:SCALE] | harmonic | power:EXP[:SCALE] | geometric:RATIO[:SCALE]
    #[arg(long)]
    schedule: Option<String>,
}

impl Tuning {
    fn overrides(self) -> Overrides {
        Overrides { max_evals: self.max_evals, target_mu: self.target_mu, schedule: self.schedule }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and print a JSON report.
    Solve {
        /// Problem file or catalog fixture name.
        spec: String,
        /// Write per-step rows as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Fill dist_pmu with the distance to the reference regularized point.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Run the certification checks on a problem, a fixture, or `all`.
    Check {
        target: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Point pairs for the monotonicity check.
        #[arg(long, default_value_t = 10_000)]
        pairs: usize,
        /// Probes for the angle inequality.
        #[arg(long, default_value_t = 1_000)]
        probes: usize,
        /// Samples for the local sup-norm estimate.
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Print a convergence table as CSV.
    Table {
        specs: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        tuning: Tuning,
    },
}

/// Runs a command; returns the text for stdout and the exit code.
fn run(cli: Cli) -> anyhow::Result<(String, i32)> {
    match cli.command {
        Command::Solve { spec, trace, oracle, seed, tuning } => {
            let args = SolveArgs { target: spec, trace, oracle, seed, overrides: tuning.overrides() };
            let (json, code) = cmd_solve(&args)?;
            Ok((format!("{json}\n"), code))
        }
        Command::Check { target, seed, pairs, probes, samples } => {
            cmd_check(&target, &CheckOptions { seed, pairs, probes, samples })
        }
        Command::Table { specs, seed: _, tuning } => Ok((cmd_table(&specs, &tuning.overrides())?, 0)),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok((text, code)) => {
            // a closed pipe is not an error
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
