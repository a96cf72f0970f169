use fiberwise::cheb_lp::{brute_force_cheb_oracle, cheb_best_approx};
use fiberwise::corpus::{self, streams};
use fiberwise::function_algebra::sup_norm;
use fiberwise::localization::{
    construct_approximant, fiber_rows, localize_distance, EQUALITY_TOLERANCE,
};
use serde::Deserialize;
use serde_json::json;

use super::module_instances;
use crate::config::{Fixture, ScenarioConfig};
use crate::report::{num, Outcome, Table};
use crate::CliError;

/// Slack of the unconditional inequality `global >= sup over fibers`.
const EASY_SLACK: f64 = 1e-7;

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct LocalizeParams {}

pub fn localize(config: &ScenarioConfig) -> Result<Outcome, CliError> {
    let _: LocalizeParams = config.params()?;
    let mut out = Outcome::default();
    if let Fixture::Corpus { kind, count, start } = config.fixture()? {
        if kind == "cheb" {
            return cheb_oracle(config, *start, *count, out);
        }
    }
    let tol = config.tolerance.unwrap_or(EQUALITY_TOLERANCE);
    let instances = module_instances(config, &mut out)?;
    let mut summary = Table::new(
        "instances",
        &["instance", "global", "sup_fiber", "gap", "status"],
    );
    let mut fibers = Table::new(
        "fibers",
        &["instance", "fiber_id", "fiber_size", "fiber_distance"],
    );
    let (mut verified, mut flagged, mut worst_rel) = (0usize, 0usize, 0.0f64);
    let mut inline_report = None;
    for (label, fx) in &instances {
        let r = localize_distance(&fx.function, &fx.module)?;
        let scale = 1.0 + sup_norm(&fx.function);
        out.checks.check(
            "easy-inequality",
            r.global_distance >= r.sup_fiber_distance - EASY_SLACK,
            || {
                format!(
                    "{label}: global {} < sup over fibers {}",
                    r.global_distance, r.sup_fiber_distance
                )
            },
        );
        let status = if r.preflight.passed {
            let rel = (r.global_distance - r.sup_fiber_distance).abs() / scale;
            worst_rel = worst_rel.max(rel);
            out.checks.check("localization-equality", rel <= tol, || {
                format!("{label}: relative gap {rel:e} exceeds {tol:e}")
            });
            verified += 1;
            if rel <= tol {
                "verified"
            } else {
                "equality-failed"
            }
        } else {
            flagged += 1;
            "flagged"
        };
        summary.push(vec![
            label.clone(),
            num(r.global_distance),
            num(r.sup_fiber_distance),
            num(r.gap),
            status.into(),
        ]);
        for row in fiber_rows(&fx.module, &r) {
            fibers.push(vec![
                label.clone(),
                row.fiber_id,
                row.fiber_size.to_string(),
                num(row.fiber_distance),
            ]);
        }
        if instances.len() == 1 {
            inline_report = Some(json!({"status": status, "localization": r}));
        }
    }
    out.result("instances", instances.len());
    out.result("verified", verified);
    out.result("flagged", flagged);
    out.result("worst_relative_gap", worst_rel);
    if let Some(r) = inline_report {
        out.result("detail", r);
    }
    out.tables.push(summary);
    out.tables.push(fibers);
    Ok(out)
}

fn cheb_oracle(
    config: &ScenarioConfig,
    start: u64,
    count: u64,
    mut out: Outcome,
) -> Result<Outcome, CliError> {
    out.streams.insert("cheb".into(), streams::CHEB);
    let mut table = Table::new(
        "oracle",
        &[
            "instance",
            "points",
            "dimensions",
            "lp_distance",
            "oracle_distance",
            "allowed",
        ],
    );
    for i in start..start + count {
        let inst = corpus::cheb_instance(config.seed, i);
        let lp = cheb_best_approx(&inst.f, &inst.basis, &inst.points)?;
        let radius = 1.5 * lp.coefficients.iter().map(|c| c.norm()).fold(0.0, f64::max) + 0.5;
        let steps = if inst.basis.len() <= 2 { 201 } else { 61 };
        let oracle = brute_force_cheb_oracle(&inst.f, &inst.basis, &inst.points, radius, steps)?;
        let h = 2.0 * radius / (steps - 1) as f64;
        let allowed = 2.0 * h * inst.basis.iter().map(sup_norm).sum::<f64>();
        let diff = (lp.distance - oracle.distance).abs();
        out.checks.check("oracle-agreement", diff <= allowed, || {
            format!(
                "instance {i}: |{} - {}| > {allowed:e}",
                lp.distance, oracle.distance
            )
        });
        out.checks
            .check("lp-optimal", lp.distance <= oracle.distance + 1e-9, || {
                format!(
                    "instance {i}: lp {} above grid {}",
                    lp.distance, oracle.distance
                )
            });
        table.push(vec![
            i.to_string(),
            inst.points.len().to_string(),
            inst.basis.len().to_string(),
            num(lp.distance),
            num(oracle.distance),
            num(allowed),
        ]);
    }
    out.result("instances", count);
    out.tables.push(table);
    Ok(out)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ApproximantParams {
    #[serde(default = "default_eps")]
    eps: Vec<f64>,
}

fn default_eps() -> Vec<f64> {
    vec![0.5, 0.1, 0.01]
}

pub fn approximant(config: &ScenarioConfig) -> Result<Outcome, CliError> {
    let p: ApproximantParams = config.params()?;
    if p.eps.is_empty() || p.eps.iter().any(|e| !(*e > 0.0)) {
        return Err(CliError::Config("eps values must be positive".into()));
    }
    let mut out = Outcome::default();
    let instances = module_instances(config, &mut out)?;
    let mut table = Table::new(
        "approximants",
        &[
            "instance",
            "eps",
            "sup_fiber",
            "achieved",
            "bound",
            "regions",
            "status",
        ],
    );
    let mut flagged = 0usize;
    for (label, fx) in &instances {
        let r = localize_distance(&fx.function, &fx.module)?;
        if !r.preflight.passed {
            flagged += 1;
            for &eps in &p.eps {
                table.push(vec![
                    label.clone(),
                    num(eps),
                    num(r.sup_fiber_distance),
                    String::new(),
                    String::new(),
                    String::new(),
                    "flagged".into(),
                ]);
            }
            continue;
        }
        let scale = 1.0 + sup_norm(&fx.function);
        for &eps in &p.eps {
            let a = construct_approximant(&fx.function, &fx.module, eps)?;
            let achieved = sup_norm(&fx.function.minus(&a.assembled)?);
            let bound = r.sup_fiber_distance + eps;
            out.checks
                .check("approximant-within-bound", achieved <= bound, || {
                    format!("{label} at eps {eps}: error {achieved} > {bound}")
                });
            out.checks.check(
                "approximant-in-module",
                a.span_residual <= 1e-6 * scale,
                || format!("{label} at eps {eps}: span residual {:e}", a.span_residual),
            );
            table.push(vec![
                label.clone(),
                num(eps),
                num(r.sup_fiber_distance),
                num(achieved),
                num(bound),
                a.regions.len().to_string(),
                "verified".into(),
            ]);
        }
    }
    out.result("instances", instances.len());
    out.result("flagged", flagged);
    out.result("eps", &p.eps);
    out.tables.push(table);
    Ok(out)
}
