use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::report::{Status, Table};
use crate::{run_config, CliError};

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SuiteEntry {
    pub config: String,
    pub scenario: Option<String>,
    /// `pass`, `fail` or `error`.
    pub status: String,
    pub checked: usize,
    pub failed: usize,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteSummary {
    pub schema: &'static str,
    pub entries: Vec<SuiteEntry>,
    pub failing: Vec<String>,
    pub errors: Vec<String>,
}

impl SuiteSummary {
    pub fn exit_code(&self) -> i32 {
        if !self.failing.is_empty() {
            2
        } else if !self.errors.is_empty() {
            1
        } else {
            0
        }
    }
}

/// `*.json` files directly inside `dir`, by file name.
pub fn config_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

fn run_one(path: &Path, out: &Path) -> SuiteEntry {
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("")
        .to_string();
    let config = match ScenarioConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            return SuiteEntry {
                config: name,
                scenario: None,
                status: "error".into(),
                checked: 0,
                failed: 0,
                message: e.to_string(),
            }
        }
    };
    let scenario = Some(config.scenario.name().to_string());
    match run_config(&config, out) {
        Ok(r) => {
            let checked = r.assertions.iter().map(|a| a.checked).sum();
            let failed: usize = r.assertions.iter().map(|a| a.failed).sum();
            let message = r
                .assertions
                .iter()
                .filter(|a| !a.passed())
                .map(|a| a.name.clone())
                .collect::<Vec<_>>()
                .join("; ");
            SuiteEntry {
                config: name,
                scenario,
                status: if r.status == Status::Pass {
                    "pass"
                } else {
                    "fail"
                }
                .into(),
                checked,
                failed,
                message,
            }
        }
        Err(e) => SuiteEntry {
            config: name,
            scenario,
            status: "error".into(),
            checked: 0,
            failed: 0,
            message: e.to_string(),
        },
    }
}

/// Runs every config of `dir` concurrently and writes `summary.json` and
/// `summary.csv` into `out`.
pub fn run_suite(dir: &Path, out: &Path) -> Result<SuiteSummary, CliError> {
    let files = config_files(dir)?;
    fs::create_dir_all(out)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;
    let entries: Vec<SuiteEntry> = files.par_iter().map(|p| run_one(p, out)).collect();
    let pick = |s: &str| -> Vec<String> {
        entries
            .iter()
            .filter(|e| e.status == s)
            .map(|e| e.config.clone())
            .collect()
    };
    let summary = SuiteSummary {
        schema: crate::report::SCHEMA,
        failing: pick("fail"),
        errors: pick("error"),
        entries,
    };
    let mut t = Table::new(
        "summary",
        &[
            "config", "scenario", "status", "checked", "failed", "message",
        ],
    );
    for e in &summary.entries {
        t.push(vec![
            e.config.clone(),
            e.scenario.clone().unwrap_or_default(),
            e.status.clone(),
            e.checked.to_string(),
            e.failed.to_string(),
            e.message.clone(),
        ]);
    }
    let write = |name: &str, bytes: Vec<u8>| -> Result<(), CliError> {
        let p = out.join(name);
        fs::write(&p, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))
    };
    write("summary.csv", t.to_csv()?)?;
    let mut json = serde_json::to_vec_pretty(&summary).map_err(|e| CliError::Io(e.to_string()))?;
    json.push(b'\n');
    write("summary.json", json)?;
    Ok(summary)
}
