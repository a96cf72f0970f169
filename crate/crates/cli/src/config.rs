use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Localize,
    Approximant,
    Envelope,
    Pipeline,
    Cover,
    Density,
    Obstruction,
    Avoidance,
    Badset,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Localize => "localize",
            Scenario::Approximant => "approximant",
            Scenario::Envelope => "envelope",
            Scenario::Pipeline => "pipeline",
            Scenario::Cover => "cover",
            Scenario::Density => "density",
            Scenario::Obstruction => "obstruction",
            Scenario::Avoidance => "avoidance",
            Scenario::Badset => "badset",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Scenario,
    seed: u64,
    #[serde(default)]
    fixture: Option<Value>,
    #[serde(default)]
    parameters: Option<Value>,
    #[serde(default)]
    tolerance: Option<f64>,
    #[serde(default)]
    output: Option<OutputSpec>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Directory for reports, relative to the config file.
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

/// Where the instances of a scenario come from.
#[derive(Debug, Clone)]
pub enum Fixture {
    Inline(Value),
    Corpus {
        kind: String,
        count: u64,
        start: u64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusSpec {
    corpus: String,
    count: u64,
    #[serde(default)]
    start: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSpec {
    file: PathBuf,
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub name: String,
    pub scenario: Scenario,
    pub seed: u64,
    pub fixture: Option<Fixture>,
    pub parameters: Value,
    pub tolerance: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

fn resolve_fixture(value: Value, base: &Path) -> Result<Fixture, CliError> {
    if let Ok(spec) = serde_json::from_value::<CorpusSpec>(value.clone()) {
        return Ok(Fixture::Corpus {
            kind: spec.corpus,
            count: spec.count,
            start: spec.start,
        });
    }
    if let Ok(spec) = serde_json::from_value::<FileSpec>(value.clone()) {
        let path = base.join(&spec.file);
        let text = fs::read_to_string(&path).map_err(|e| {
            CliError::Config(format!("cannot read fixture {}: {e}", path.display()))
        })?;
        let inner: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("malformed fixture {}: {e}", path.display())))?;
        return resolve_fixture(inner, path.parent().unwrap_or(base));
    }
    Ok(Fixture::Inline(value))
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("scenario")
            .to_string();
        Self::parse(&text, &name, base)
    }

    pub fn parse(text: &str, name: &str, base: &Path) -> Result<Self, CliError> {
        let raw: RawConfig = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("malformed config {name}: {e}")))?;
        if let Some(t) = raw.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Config(format!(
                    "tolerance must be positive, got {t}"
                )));
            }
        }
        let parameters = raw
            .parameters
            .unwrap_or_else(|| Value::Object(Default::default()));
        if !parameters.is_object() {
            return Err(CliError::Config("parameters must be an object".into()));
        }
        Ok(Self {
            name: name.to_string(),
            scenario: raw.scenario,
            seed: raw.seed,
            fixture: raw.fixture.map(|f| resolve_fixture(f, base)).transpose()?,
            parameters,
            tolerance: raw.tolerance,
            output_dir: raw.output.and_then(|o| o.dir).map(|d| base.join(d)),
        })
    }

    /// Scenario parameters decoded into `T`; absent fields take defaults.
    pub fn params<T: serde::de::DeserializeOwned>(&self) -> Result<T, CliError> {
        serde_json::from_value(self.parameters.clone()).map_err(|e| {
            CliError::Config(format!("bad parameters for {}: {e}", self.scenario.name()))
        })
    }

    pub fn fixture(&self) -> Result<&Fixture, CliError> {
        self.fixture.as_ref().ok_or_else(|| {
            CliError::Config(format!("scenario {} needs a fixture", self.scenario.name()))
        })
    }
}
