use fiberwise::corpus::{self, streams};
use fiberwise::regular_vector::{
    brute_force_avoidance_oracle, find_regular_vector, passes_margin, AvoidanceInstance,
};
use fiberwise::Error;
use serde::Deserialize;

use super::unknown_corpus;
use crate::config::{Fixture, ScenarioConfig};
use crate::fixtures::inline;
use crate::report::{num, Outcome, Table};
use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AvoidanceParams {
    #[serde(default = "default_grid")]
    oracle_grid: i64,
}

fn default_grid() -> i64 {
    3
}

/// `sum_i t^i s_i` in floating point.
fn combination(s: &[Vec<f64>], t: u64) -> Vec<f64> {
    let mut v = vec![0.0; s[0].len()];
    let mut power = 1.0;
    for si in s {
        for (vk, sk) in v.iter_mut().zip(si) {
            *vk += power * sk;
        }
        power *= t as f64;
    }
    v
}

pub fn avoidance(config: &ScenarioConfig) -> Result<Outcome, CliError> {
    let p: AvoidanceParams = config.params()?;
    let mut out = Outcome::default();
    let instances: Vec<(String, AvoidanceInstance, Option<bool>)> = match config.fixture()? {
        Fixture::Inline(v) => {
            let inst: AvoidanceInstance = inline(v)?;
            inst.validate()?;
            vec![("inline".into(), inst, None)]
        }
        Fixture::Corpus { kind, count, start } => {
            if kind != "random" {
                return Err(unknown_corpus(config.scenario, kind));
            }
            out.streams.insert("avoidance".into(), streams::AVOIDANCE);
            (*start..*start + *count)
                .map(|i| {
                    let (inst, feasible) = corpus::avoidance_instance(config.seed, i);
                    (format!("instance-{i}"), inst, Some(feasible))
                })
                .collect()
        }
    };
    let mut table = Table::new(
        "vectors",
        &[
            "instance",
            "dimension",
            "s",
            "t",
            "status",
            "min_relative_value",
        ],
    );
    let (mut found, mut rejected) = (0usize, 0usize);
    for (label, inst, expected) in &instances {
        let result = find_regular_vector(inst);
        let ok = match &result {
            Ok(r) => {
                found += 1;
                let v = combination(&inst.s, r.t);
                let scale = v.iter().map(|x| x.abs()).fold(1.0, f64::max);
                let span_err = v
                    .iter()
                    .zip(&r.v)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                out.checks.check("in-span", span_err <= 1e-12 * scale, || {
                    format!("{label}: |v - sum t^i s_i| = {span_err:e}")
                });
                out.checks.check(
                    "avoids-hyperplanes",
                    passes_margin(&inst.t_dual, &r.v),
                    || format!("{label}: some functional is within the margin"),
                );
                table.push(vec![
                    label.clone(),
                    inst.dimension().to_string(),
                    inst.s.len().to_string(),
                    r.t.to_string(),
                    "found".into(),
                    num(r.min_relative_value),
                ]);
                true
            }
            Err(Error::Precondition(msg)) => {
                rejected += 1;
                table.push(vec![
                    label.clone(),
                    inst.dimension().to_string(),
                    inst.s.len().to_string(),
                    String::new(),
                    msg.clone(),
                    String::new(),
                ]);
                false
            }
            Err(e) => return Err(e.clone().into()),
        };
        if let Some(exp) = expected {
            out.checks.check("expected-outcome", ok == *exp, || {
                format!("{label}: expected feasible = {exp}, got {ok}")
            });
        }
        if inst.s.len() <= 3 {
            let oracle = brute_force_avoidance_oracle(inst, p.oracle_grid)?;
            out.checks
                .check("oracle-agreement", oracle.is_some() == ok, || {
                    format!(
                        "{label}: oracle found = {}, solver found = {ok}",
                        oracle.is_some()
                    )
                });
        }
    }
    out.result("found", found);
    out.result("rejected", rejected);
    if instances.len() == 1 {
        if let Ok(r) = find_regular_vector(&instances[0].1) {
            out.result("vector", r);
        }
    }
    out.tables.push(table);
    Ok(out)
}
