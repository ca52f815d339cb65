use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use prgd::commands::{self, Failure, RunOverrides, EXIT_OK, EXIT_USAGE};
use prgd::parallel::workers_from_env;
use prgd::suites::Suite;

/// Privacy accounting and experiments for gradient descent with ball noise.
#[derive(Debug, Parser)]
#[command(name = "prgd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report per-step, amplified and composed δ for one configuration.
    Account {
        #[arg(long)]
        d: usize,
        #[arg(long = "delta-x")]
        delta_x: f64,
        /// Dataset size.
        #[arg(long)]
        n: usize,
        /// Number of steps.
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
    /// Tabulate δ over dimensions and a Δx grid as CSV.
    Curve {
        /// Comma-separated dimensions, e.g. `1,3,7`.
        #[arg(long)]
        d: String,
        /// `start:stop:step` or a single Δx.
        #[arg(long)]
        range: String,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment described by a TOML config and write its trace.
    Run {
        config: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long = "step-size")]
        step_size: Option<f64>,
        #[arg(long = "noise-radius")]
        noise_radius: Option<f64>,
    },
    /// Check the analytic results against Monte Carlo and closed-form oracles.
    Validate {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    let mut stdout = io::stdout().lock();
    let text = match cmd {
        Command::Account { d, delta_x, n, t, radius } => commands::account(d, delta_x, n, t, radius)?,
        Command::Curve { d, range, radius, out } => commands::curve(&d, &range, radius, out.as_deref())?,
        Command::Run { config, trace, seed, steps, step_size, noise_radius } => {
            let overrides = RunOverrides { trace, seed, steps, step_size, noise_radius };
            commands::run(&config, &overrides)?
        }
        Command::Validate { suite, samples, seed } => {
            commands::validate(suite, samples, seed, workers_from_env(), &mut stdout)?;
            String::new()
        }
    };
    // A closed pipe is not worth an error exit.
    let _ = stdout.write_all(text.as_bytes());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
