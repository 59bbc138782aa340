use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use giant_cli::{ExperimentConfig, GenConfig};

#[derive(Parser)]
#[command(name = "giant", version, about = "Distributed approximate Newton experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write trace.csv and summary.txt.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Override the root seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Record elapsed time in the trace (output is then not reproducible).
        #[arg(long)]
        wall_clock: bool,
    },
    /// Run the theory checks and print or write the report.
    Verify {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a synthetic dataset in LIBSVM format.
    Gen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, output, seed, wall_clock } => {
            let mut config = ExperimentConfig::load(&config)?;
            if let Some(o) = output {
                config.output = Some(o);
            }
            if let Some(s) = seed {
                config.seed = s;
            }
            config.wall_clock |= wall_clock;
            let report = giant_cli::run_experiment(&config)?;
            print!("{}", report.summary(config.solver.name()));
            if !report.success() {
                eprintln!("run did not succeed: {}", report.outcome.termination);
                if report.accounting_violations > 0 {
                    eprintln!("{} trace rows break the communication schedule", report.accounting_violations);
                }
            }
            Ok(report.success())
        }
        Command::Verify { suite, output } => {
            let config = giant_cli::load_suite_config(&suite)?;
            let report = giant_cli::run_theory_suite(&config, output.as_deref())?;
            if output.is_none() {
                print!("{}", report.to_text());
            }
            let failures = report.failures();
            if !failures.is_empty() {
                let names: Vec<&str> = failures.iter().map(|c| c.name.as_str()).collect();
                eprintln!("failed checks: {}", names.join(", "));
            }
            Ok(failures.is_empty())
        }
        Command::Gen { spec, output } => {
            let config = GenConfig::load(&spec)?;
            let path = giant_cli::generate(&config, output.as_deref())?;
            println!("{}", path.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
