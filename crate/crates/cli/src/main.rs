use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use superrad_cli::{CliError, RunConfig};

#[derive(Parser)]
#[command(name = "superrad", version, about = "Collective radiative decay simulations")]
struct Cli {
    /// Worker threads for trajectory ensembles [default: $SUPERRAD_WORKERS or all cores].
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write the series CSV and summary.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write the analytic peak and steady-state predictions.
    Predict {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare one observable between two configs or series CSVs.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        observable: String,
        /// Tolerance in combined standard errors.
        #[arg(long)]
        tol: f64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let workers = match cli.workers {
        Some(0) => return Err(CliError::Config("--workers: must be at least 1".into())),
        Some(w) => w,
        None => superrad_cli::default_workers()?,
    };
    match cli.command {
        Command::Simulate { config } => {
            let c = RunConfig::load(&config)?;
            let (_, written) = superrad_cli::run_simulation(&c, &config, workers)?;
            for p in written.series.iter().chain(&written.summary) {
                println!("wrote {}", p.display());
            }
        }
        Command::Predict { config } => {
            let c = RunConfig::load(&config)?;
            let (summary, written) = superrad_cli::run_prediction(&c, &config)?;
            print!("{}", summary.to_text());
            if let Some(p) = written.summary {
                println!("# wrote {}", p.display());
            }
        }
        Command::Compare { a, b, observable, tol } => {
            let report = superrad_cli::compare(&a, &b, &observable, tol, workers)?;
            print!("{}", superrad_cli::format_report(&report));
            if !report.pass {
                return Err(CliError::Comparison(format!(
                    "{} of {} points outside {tol} sigma",
                    report.failures, report.points
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { superrad_cli::EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("superrad: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
