//! Experiment runner behind the `advlin` binary.
//!
//! A run reads an [`ExperimentConfig`], executes its scenario on a rayon pool
//! sized by `ADVLIN_THREADS` (hardware default when unset), and writes
//! `<output>/<scenario>.csv`.

pub mod config;
pub mod error;
pub mod oneshot;
pub mod scenarios;
pub mod table;

use std::path::PathBuf;

pub use config::{ExperimentConfig, Scenario};
pub use error::{CliError, CliResult};
pub use table::Table;

pub const THREADS_ENV: &str = "ADVLIN_THREADS";

/// Thread pool honoring `ADVLIN_THREADS`.
pub fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let n: usize = value
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got '{value}'")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))
}

/// Output of one scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub csv: PathBuf,
    pub table: Table,
}

/// Runs the scenario and writes its CSV.
pub fn run(cfg: &ExperimentConfig) -> CliResult<RunSummary> {
    cfg.validate()?;
    let pool = thread_pool()?;
    let table = pool.install(|| scenarios::run_scenario(cfg))?;
    let csv = cfg.csv_path();
    table.write(&csv)?;
    Ok(RunSummary { csv, table })
}
