//! Driver layer for the `superrad` binary: configuration, execution and
//! output files.

pub mod config;
pub mod output;
pub mod summary;

use std::path::{Path, PathBuf};
use std::time::Instant;

use superrad::analytic;
use superrad::observables::ObservableSeries;
use superrad::runner::{self, CompareReport};
use superrad::Model;

pub use config::RunConfig;
pub use summary::RunSummary;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "SUPERRAD_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
    #[error("comparison failed: {0}")]
    Comparison(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) | CliError::Comparison(_) => EXIT_FAILURE,
        }
    }
}

impl From<superrad::Error> for CliError {
    fn from(e: superrad::Error) -> Self {
        use superrad::Error as E;
        match e {
            E::InvalidParameter { .. } | E::Capability { .. } | E::Capacity { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Worker count from `SUPERRAD_WORKERS`, falling back to the number of
/// available cores.
pub fn default_workers() -> Result<usize, CliError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(w),
            _ => Err(CliError::Config(format!("{WORKERS_ENV}: expected a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Paths written by a command.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Written {
    pub series: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

fn default_output(config_path: &Path, ext: &str) -> PathBuf {
    config_path.with_extension(ext)
}

/// Runs a simulation config, or a prediction for the analytic backend.
pub fn run_simulation(config: &RunConfig, config_path: &Path, workers: usize) -> Result<(RunSummary, Written), CliError> {
    if config.run.backend == config::BackendConfig::Analytic {
        return run_prediction(config, config_path);
    }
    let spec = config.to_spec(workers)?;
    let start = Instant::now();
    let out = runner::simulate(&spec)?;
    check_series(&out.series)?;
    let summary = RunSummary::from_run(config, &spec, &out, start.elapsed().as_secs_f64());
    let series_path = config
        .output
        .series
        .clone()
        .unwrap_or_else(|| default_output(config_path, "csv"));
    let summary_path = config
        .output
        .summary
        .clone()
        .unwrap_or_else(|| default_output(config_path, "summary.toml"));
    std::fs::write(&series_path, output::to_csv(&out.series))
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", series_path.display())))?;
    std::fs::write(&summary_path, summary.to_text())
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", summary_path.display())))?;
    Ok((
        summary,
        Written {
            series: Some(series_path),
            summary: Some(summary_path),
        },
    ))
}

/// Analytic predictions for a squeezed model; writes the summary only.
pub fn run_prediction(config: &RunConfig, config_path: &Path) -> Result<(RunSummary, Written), CliError> {
    let Model::Squeezed(m) = config.build_model()? else {
        return Err(CliError::Config("model: analytic predictions exist only for the squeezed model".into()));
    };
    let start = Instant::now();
    let peak = analytic::peak_predictions(&m)?;
    let steady = analytic::steady_excitation(m.zeta).ok();
    let summary = RunSummary::from_prediction(config, &peak, steady, start.elapsed().as_secs_f64());
    let summary_path = config
        .output
        .summary
        .clone()
        .unwrap_or_else(|| default_output(config_path, "summary.toml"));
    std::fs::write(&summary_path, summary.to_text())
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", summary_path.display())))?;
    Ok((
        summary,
        Written {
            series: None,
            summary: Some(summary_path),
        },
    ))
}

/// Rejects series whose core columns contain non-finite values.
fn check_series(s: &ObservableSeries) -> Result<(), CliError> {
    use superrad::observables::names;
    for name in [names::SZ, names::RATE] {
        if let Some(v) = s.values(name) {
            if let Some(k) = v.iter().position(|x| !x.is_finite()) {
                return Err(CliError::Numerical(format!("{name} is not finite at t = {}", s.times[k])));
            }
        }
    }
    Ok(())
}

/// A comparison input: a CSV series, or a config that is simulated.
pub fn load_series(path: &Path, workers: usize) -> Result<ObservableSeries, CliError> {
    if path.extension().is_some_and(|e| e == "csv") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        return output::from_csv(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())));
    }
    let config = RunConfig::load(path)?;
    let spec = config.to_spec(workers)?;
    let out = runner::simulate(&spec)?;
    check_series(&out.series)?;
    Ok(out.series)
}

pub fn compare(a: &Path, b: &Path, observable: &str, tol: f64, workers: usize) -> Result<CompareReport, CliError> {
    let sa = load_series(a, workers)?;
    let sb = load_series(b, workers)?;
    if sa.meta.model != sb.meta.model || sa.meta.n != sb.meta.n {
        return Err(CliError::Config(format!(
            "models differ: {} n={} vs {} n={}",
            sa.meta.model, sa.meta.n, sb.meta.model, sb.meta.n
        )));
    }
    runner::compare_series(&sa, &sb, observable, tol).map_err(|e| CliError::Config(e.to_string()))
}

pub fn format_report(r: &CompareReport) -> String {
    format!(
        "observable = \"{}\"\npoints = {}\ntolerance_sigma = {}\nmax_abs_deviation = {:e}\nmax_sigma = {}\nfailures = {}\npass = {}\n",
        r.observable, r.points, r.tolerance_sigma, r.max_abs_deviation, r.max_sigma, r.failures, r.pass
    )
}
