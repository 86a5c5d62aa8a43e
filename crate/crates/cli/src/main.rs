//! `gphrf`: simulate event-related signals, fit GP HRF models and run the
//! estimator benchmarks.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 input parse
//! error, 5 numerical failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::CliError;

#[derive(Debug, Parser)]
#[command(name = "gphrf", version, about = "Gaussian-process HRF estimation for event-related signals")]
struct Cli {
    /// Overrides the `seed` of the configuration file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic paradigm and signal.
    Simulate {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Fit activations and HRF to one run.
    Fit {
        #[arg(long)]
        paradigm: PathBuf,
        #[arg(long)]
        timeseries: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Fit on run A and score prediction and projection on run B.
    Score {
        #[arg(long)]
        train_paradigm: PathBuf,
        #[arg(long)]
        train_timeseries: PathBuf,
        #[arg(long)]
        test_paradigm: PathBuf,
        #[arg(long)]
        test_timeseries: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Score every method on every synthetic dataset of the benchmark grid.
    Benchmark {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Fit one synthetic run with each kernel length scale of the study.
    GammaStudy {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, short)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let seed = cli.seed;
    match cli.command {
        Command::Simulate { config, out } => {
            commands::simulate(&commands::load_config(config.config.as_deref(), seed)?, &out)
        }
        Command::Fit {
            paradigm,
            timeseries,
            config,
            out,
        } => commands::fit(
            &commands::load_config(config.config.as_deref(), seed)?,
            &paradigm,
            &timeseries,
            &out,
        ),
        Command::Score {
            train_paradigm,
            train_timeseries,
            test_paradigm,
            test_timeseries,
            config,
            out,
        } => commands::score(
            &commands::load_config(config.config.as_deref(), seed)?,
            (&train_paradigm, &train_timeseries),
            (&test_paradigm, &test_timeseries),
            &out,
        ),
        Command::Benchmark { config, out } => {
            commands::benchmark(&commands::load_config(config.config.as_deref(), seed)?, &out)
        }
        Command::GammaStudy { config, out } => {
            commands::gamma_study(&commands::load_config(config.config.as_deref(), seed)?, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
