use std::collections::BTreeMap;
use std::sync::Arc;

use fiberwise::density::SequenceRule;
use fiberwise::fibered_space::{FiberedSystem, SystemDocument};
use fiberwise::function_algebra::{
    FunctionDocument, ModuleDocument, PullbackModule, SampledFunction,
};
use fiberwise::tau_envelope::RiemannIntegrableDescriptor;
use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

/// Inline fixture shared by the module-based scenarios.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleFixtureDoc {
    pub system: SystemDocument,
    pub module: ModuleDocument,
    pub function: FunctionDocument,
    #[serde(default)]
    pub bad_points: Vec<String>,
    #[serde(default)]
    pub sequence: Option<SequenceDoc>,
}

/// A measure sequence rule with per-point weights keyed by id.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceDoc {
    pub kind: String,
    pub nu: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct ModuleFixture {
    pub module: PullbackModule,
    pub function: SampledFunction,
    pub bad_points: Vec<usize>,
    pub sequence: Option<SequenceRule>,
}

impl ModuleFixture {
    pub fn descriptor(&self) -> Result<RiemannIntegrableDescriptor, CliError> {
        Ok(RiemannIntegrableDescriptor::new(
            self.function.clone(),
            self.bad_points.clone(),
        )?)
    }
}

pub fn module_fixture(value: &Value) -> Result<ModuleFixture, CliError> {
    let doc: ModuleFixtureDoc = serde_json::from_value(value.clone())
        .map_err(|e| CliError::Config(format!("malformed fixture: {e}")))?;
    let system = Arc::new(FiberedSystem::from_document(&doc.system)?);
    let module = PullbackModule::from_document(system.clone(), &doc.module)?;
    let source = system.source();
    let function = SampledFunction::from_document(source.clone(), &doc.function)?;
    let bad_points = doc
        .bad_points
        .iter()
        .map(|id| source.index_of(id))
        .collect::<fiberwise::Result<Vec<_>>>()?;
    let sequence = doc
        .sequence
        .map(|s| {
            let mut nu = vec![0.0; source.len()];
            for (id, w) in &s.nu {
                nu[source.index_of(id)?] = *w;
            }
            match s.kind.as_str() {
                "perturbation" => Ok(SequenceRule::Perturbation { nu }),
                "alternating" => Ok(SequenceRule::Alternating { nu }),
                other => Err(CliError::Config(format!("unknown sequence kind `{other}`"))),
            }
        })
        .transpose()?;
    Ok(ModuleFixture {
        module,
        function,
        bad_points,
        sequence,
    })
}

/// Decodes an inline fixture of a plain serde type.
pub fn inline<T: serde::de::DeserializeOwned>(value: &Value) -> Result<T, CliError> {
    serde_json::from_value(value.clone())
        .map_err(|e| CliError::Config(format!("malformed fixture: {e}")))
}
