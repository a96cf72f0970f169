//! Batch runner: scenario configs in, JSON reports and CSV tables out.

pub mod config;
pub mod fixtures;
pub mod report;
pub mod scenarios;
pub mod suite;

use std::path::{Path, PathBuf};

use config::ScenarioConfig;
use report::{Report, Status};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] fiberwise::Error),
}

/// Command-line overrides of a config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
}

fn default_out(path: &Path) -> PathBuf {
    path.parent().unwrap_or(Path::new(".")).join("reports")
}

/// Loads, runs and writes one scenario.
pub fn run(path: &Path, opts: &RunOptions) -> Result<Report, CliError> {
    let mut config = ScenarioConfig::load(path)?;
    if let Some(s) = opts.seed {
        config.seed = s;
    }
    if let Some(t) = opts.tolerance {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Config(format!(
                "tolerance must be positive, got {t}"
            )));
        }
        config.tolerance = Some(t);
    }
    let dir = opts
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| default_out(path));
    run_config(&config, &dir)
}

pub fn run_config(config: &ScenarioConfig, dir: &Path) -> Result<Report, CliError> {
    let outcome = scenarios::execute(config)?;
    report::write_outputs(config, outcome, dir)
}

/// 0 on pass, 2 on a failed assertion, 1 on any error.
pub fn exit_code(result: &Result<Report, CliError>) -> i32 {
    match result {
        Ok(r) if r.status == Status::Pass => 0,
        Ok(_) => 2,
        Err(_) => 1,
    }
}
