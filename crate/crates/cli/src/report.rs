use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::ScenarioConfig;
use crate::CliError;

pub const SCHEMA: &str = "1";

/// Aggregated outcome of one named assertion over every instance.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Assertion {
    pub name: String,
    pub checked: usize,
    pub failed: usize,
    /// The first failing instance, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
}

impl Assertion {
    pub fn passed(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Debug, Default)]
pub struct Checks {
    list: Vec<Assertion>,
}

impl Checks {
    pub fn check(&mut self, name: &str, ok: bool, detail: impl FnOnce() -> String) {
        let pos = match self.list.iter().position(|a| a.name == name) {
            Some(p) => p,
            None => {
                self.list.push(Assertion {
                    name: name.to_string(),
                    checked: 0,
                    failed: 0,
                    first_failure: None,
                });
                self.list.len() - 1
            }
        };
        let a = &mut self.list[pos];
        a.checked += 1;
        if !ok {
            a.failed += 1;
            if a.first_failure.is_none() {
                a.first_failure = Some(detail());
            }
        }
    }

    pub fn all_passed(&self) -> bool {
        self.list.iter().all(Assertion::passed)
    }

    pub fn into_vec(self) -> Vec<Assertion> {
        self.list
    }
}

/// An RFC-4180 table written next to the report.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(io_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(io_err)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

/// Shortest round-trip rendering of a float.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Everything a scenario produces.
#[derive(Debug, Default)]
pub struct Outcome {
    pub checks: Checks,
    pub results: BTreeMap<String, Value>,
    pub tables: Vec<Table>,
    /// Extra text artifacts as `(suffix, content)`.
    pub texts: Vec<(String, String)>,
    pub streams: BTreeMap<String, u64>,
}

impl Outcome {
    pub fn result(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("serializable result");
        self.results.insert(key.to_string(), v);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub name: String,
    pub scenario: &'static str,
    pub seed: u64,
    pub rng: RngHeader,
    pub tolerance: Option<f64>,
    pub status: Status,
    pub assertions: Vec<Assertion>,
    pub results: BTreeMap<String, Value>,
    pub files: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct RngHeader {
    pub generator: &'static str,
    pub streams: BTreeMap<String, u64>,
}

/// Writes the report, tables and texts into `dir`; returns the report.
pub fn write_outputs(
    config: &ScenarioConfig,
    outcome: Outcome,
    dir: &Path,
) -> Result<Report, CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let stem = &config.name;
    let mut files = vec![format!("{stem}.report.json")];
    let mut writes: Vec<(PathBuf, Vec<u8>)> = Vec::new();
    for t in &outcome.tables {
        let f = format!("{stem}.{}.csv", t.name);
        writes.push((dir.join(&f), t.to_csv()?));
        files.push(f);
    }
    for (suffix, text) in &outcome.texts {
        let f = format!("{stem}.{suffix}");
        writes.push((dir.join(&f), text.clone().into_bytes()));
        files.push(f);
    }
    let status = if outcome.checks.all_passed() {
        Status::Pass
    } else {
        Status::Fail
    };
    let report = Report {
        schema: SCHEMA,
        name: stem.clone(),
        scenario: config.scenario.name(),
        seed: config.seed,
        rng: RngHeader {
            generator: "ChaCha8",
            streams: outcome.streams,
        },
        tolerance: config.tolerance,
        status,
        assertions: outcome.checks.into_vec(),
        results: outcome.results,
        files,
    };
    let mut json = serde_json::to_vec_pretty(&report).map_err(io_err)?;
    json.push(b'\n');
    writes.insert(0, (dir.join(&report.files[0]), json));
    for (path, bytes) in writes {
        fs::write(&path, bytes)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(report)
}
