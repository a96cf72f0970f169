use fiberwise::corpus::{self, streams};
use fiberwise::obstruction::{
    build_fixture, check_trace, contradiction_replay, infeasibility_threshold, ModuleChoice,
};
use serde::Deserialize;

use super::unknown_corpus;
use crate::config::{Fixture, ScenarioConfig};
use crate::fixtures::inline;
use crate::report::{num, Outcome, Table};
use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstructionParams {
    /// Replay eps; defaults to `eps_factor * (d1 + d2)`.
    #[serde(default)]
    eps: Option<f64>,
    #[serde(default = "default_factor")]
    eps_factor: f64,
    #[serde(default = "default_threshold_tolerance")]
    threshold_tolerance: f64,
    #[serde(default = "default_separating_tolerance")]
    separating_tolerance: f64,
}

fn default_factor() -> f64 {
    0.4
}

fn default_threshold_tolerance() -> f64 {
    1e-3
}

fn default_separating_tolerance() -> f64 {
    1e-4
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MassDoc {
    d1: f64,
    d2: f64,
    #[serde(default)]
    extra: usize,
}

pub fn obstruction(config: &ScenarioConfig) -> Result<Outcome, CliError> {
    let p: ObstructionParams = config.params()?;
    let mut out = Outcome::default();
    let pairs: Vec<(String, MassDoc)> = match config.fixture()? {
        Fixture::Inline(v) => vec![("inline".into(), inline(v)?)],
        Fixture::Corpus { kind, count, start } => {
            if kind != "mass-pairs" {
                return Err(unknown_corpus(config.scenario, kind));
            }
            out.streams.insert("masses".into(), streams::MASSES);
            (*start..*start + *count)
                .map(|i| {
                    let (d1, d2) = corpus::mass_pair(config.seed, i);
                    (format!("pair-{i}"), MassDoc { d1, d2, extra: 1 })
                })
                .collect()
        }
    };
    let mut table = Table::new(
        "thresholds",
        &[
            "instance",
            "d1",
            "d2",
            "pullback",
            "expected",
            "sufficient_bound",
            "separating",
            "eps",
            "contradiction",
        ],
    );
    let mut traces = Vec::new();
    for (label, m) in &pairs {
        let fx = build_fixture(m.d1, m.d2, m.extra)?;
        let pull = infeasibility_threshold(&fx, ModuleChoice::Pullback)?;
        let sep = infeasibility_threshold(&fx, ModuleChoice::Separating)?;
        let expected = 0.5 * (m.d1 + m.d2);
        out.checks.check(
            "pullback-threshold",
            (pull.threshold - expected).abs() <= p.threshold_tolerance,
            || format!("{label}: threshold {} vs {expected}", pull.threshold),
        );
        out.checks.check(
            "above-sufficient-bound",
            pull.threshold >= pull.sufficient_bound,
            || {
                format!(
                    "{label}: threshold {} below {}",
                    pull.threshold, pull.sufficient_bound
                )
            },
        );
        out.checks.check(
            "separating-threshold",
            sep.threshold <= p.separating_tolerance,
            || format!("{label}: separating threshold {}", sep.threshold),
        );
        let eps = p.eps.unwrap_or(p.eps_factor * (m.d1 + m.d2));
        let trace = contradiction_replay(&fx, eps)?;
        out.checks.check(
            "replay",
            check_trace(&trace) && trace.contradiction == (eps < expected),
            || {
                format!(
                    "{label}: replay at {eps} gave contradiction = {}",
                    trace.contradiction
                )
            },
        );
        table.push(vec![
            label.clone(),
            num(m.d1),
            num(m.d2),
            num(pull.threshold),
            num(expected),
            num(pull.sufficient_bound),
            num(sep.threshold),
            num(eps),
            trace.contradiction.to_string(),
        ]);
        traces.push(format!("[{label}]\n{}", trace.render_text()));
        if pairs.len() == 1 {
            out.result("trace", &trace);
            out.result("pullback", &pull);
            out.result("separating", &sep);
        }
    }
    out.tables.push(table);
    out.texts.push(("trace.txt".into(), traces.join("\n")));
    Ok(out)
}
