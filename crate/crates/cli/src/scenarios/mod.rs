mod avoidance;
mod cover;
mod density;
mod envelope;
mod localize;
mod obstruction;

use fiberwise::corpus::{self, streams};

use crate::config::{Fixture, Scenario, ScenarioConfig};
use crate::fixtures::{module_fixture, ModuleFixture};
use crate::report::Outcome;
use crate::CliError;

pub fn execute(config: &ScenarioConfig) -> Result<Outcome, CliError> {
    match config.scenario {
        Scenario::Localize => localize::localize(config),
        Scenario::Approximant => localize::approximant(config),
        Scenario::Envelope => envelope::envelope(config),
        Scenario::Pipeline => envelope::pipeline(config),
        Scenario::Cover => cover::cover(config),
        Scenario::Density => density::density(config),
        Scenario::Obstruction => obstruction::obstruction(config),
        Scenario::Avoidance => avoidance::avoidance(config),
        Scenario::Badset => density::badset(config),
    }
}

pub(crate) fn unknown_corpus(scenario: Scenario, kind: &str) -> CliError {
    CliError::Config(format!(
        "scenario {} has no corpus `{kind}`",
        scenario.name()
    ))
}

/// Labeled module fixtures: the inline one, or a generated corpus.
pub(crate) fn module_instances(
    config: &ScenarioConfig,
    out: &mut Outcome,
) -> Result<Vec<(String, ModuleFixture)>, CliError> {
    match config.fixture()? {
        Fixture::Inline(v) => Ok(vec![("inline".into(), module_fixture(v)?)]),
        Fixture::Corpus { kind, count, start } => {
            let seed = config.seed;
            let range = *start..*start + *count;
            let label = |i: u64| format!("{kind}-{i}");
            match kind.as_str() {
                "random" => {
                    out.streams
                        .insert("localization".into(), streams::LOCALIZATION);
                    Ok(range
                        .map(|i| {
                            let inst = corpus::localization_instance(seed, i);
                            (label(i), plain(inst.module, inst.f))
                        })
                        .collect())
                }
                "broken" => {
                    out.streams.insert("broken".into(), streams::BROKEN);
                    Ok(range
                        .map(|i| {
                            let inst = corpus::broken_instance(seed, i);
                            (label(i), plain(inst.module, inst.f))
                        })
                        .collect())
                }
                "pipeline" => {
                    out.streams.insert("pipeline".into(), streams::PIPELINE);
                    Ok(range
                        .map(|i| {
                            let inst = corpus::pipeline_instance(seed, i);
                            (
                                label(i),
                                ModuleFixture {
                                    module: inst.module,
                                    function: inst.phi.function,
                                    bad_points: inst.phi.bad_points,
                                    sequence: None,
                                },
                            )
                        })
                        .collect())
                }
                other => Err(unknown_corpus(config.scenario, other)),
            }
        }
    }
}

fn plain(
    module: fiberwise::function_algebra::PullbackModule,
    function: fiberwise::function_algebra::SampledFunction,
) -> ModuleFixture {
    ModuleFixture {
        module,
        function,
        bad_points: Vec::new(),
        sequence: None,
    }
}

/// `max_x (|phi - m1| - m2)` and `mu(m2)`, recomputed from raw values.
pub(crate) fn recheck_envelope(
    phi: &fiberwise::function_algebra::SampledFunction,
    m1: &fiberwise::function_algebra::SampledFunction,
    m2: &fiberwise::function_algebra::SampledFunction,
    weights: &[f64],
) -> (f64, f64) {
    let mut worst = f64::NEG_INFINITY;
    let mut mass = 0.0;
    for i in 0..phi.len() {
        let d = phi.value(i) - m1.value(i);
        let bound = m2.value(i);
        worst = worst.max(d.norm() - bound.re).max(bound.im.abs());
        mass += weights[i] * bound.re;
    }
    (worst, mass)
}
