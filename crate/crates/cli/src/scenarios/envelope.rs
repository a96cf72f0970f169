use fiberwise::cheb_lp::{envelope_feasible, STRICT_SLACK};
use fiberwise::corpus::{self, streams};
use fiberwise::function_algebra::SampledFunction;
use fiberwise::tau_envelope::{
    closure_feasible_within, closure_membership, double_closure_certificate, main_theorem_pipeline,
    verify_nesting, CertificateLedger, PipelineOptions, DOMINATION_TOLERANCE,
};
use serde::Deserialize;
use serde_json::json;

use super::{module_instances, recheck_envelope, unknown_corpus};
use crate::config::{Fixture, ScenarioConfig};
use crate::fixtures::module_fixture;
use crate::report::{num, Outcome, Table};
use crate::CliError;

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct EnvelopeParams {
    #[serde(default)]
    eps: Vec<f64>,
    #[serde(default)]
    pairs: Option<usize>,
}

/// Flags along a decreasing ladder: feasibility at a rung implies it at
/// every larger rung.
fn monotone(flags: &[bool]) -> bool {
    flags.windows(2).all(|w| !w[1] || w[0])
}

/// Distinct positive values, largest first.
fn decreasing(eps: &[f64]) -> Result<Vec<f64>, CliError> {
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(CliError::Config(
            "eps ladder must be nonempty and positive".into(),
        ));
    }
    let mut v = eps.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v.dedup();
    Ok(v)
}

pub fn envelope(config: &ScenarioConfig) -> Result<Outcome, CliError> {
    let p: EnvelopeParams = config.params()?;
    let mut out = Outcome::default();
    match config.fixture()? {
        Fixture::Inline(v) => {
            let fx = module_fixture(v)?;
            let ladder = decreasing(&p.eps)?;
            ladder_rows(&mut out, "inline", &fx.module, &fx.function, &ladder, true)?;
        }
        Fixture::Corpus { kind, count, start } => {
            let range = *start..*start + *count;
            match kind.as_str() {
                "monotone" => {
                    out.streams.insert("monotone".into(), streams::MONOTONE);
                    for i in range {
                        let (module, h, eps) = corpus::monotone_instance(config.seed, i);
                        let ladder = decreasing(&eps)?;
                        ladder_rows(
                            &mut out,
                            &format!("monotone-{i}"),
                            &module,
                            &h,
                            &ladder,
                            false,
                        )?;
                    }
                }
                "nesting" => {
                    out.streams.insert("nesting".into(), streams::NESTING);
                    nesting(config, range, p.pairs.unwrap_or(5), &mut out)?;
                }
                "double-closure" => {
                    out.streams
                        .insert("double-closure".into(), streams::DOUBLE_CLOSURE);
                    double_closure(config, range, &mut out)?;
                }
                other => return Err(unknown_corpus(config.scenario, other)),
            }
        }
    }
    Ok(out)
}

fn ladder_rows(
    out: &mut Outcome,
    label: &str,
    module: &fiberwise::function_algebra::PullbackModule,
    h: &SampledFunction,
    ladder: &[f64],
    detail: bool,
) -> Result<(), CliError> {
    let mu = module.system().upstairs();
    let closure = closure_membership(h, module, mu, ladder)?;
    let mut u_flags = Vec::new();
    let mut c_flags = Vec::new();
    let mut rows = Vec::new();
    for (rung, &eps) in closure.rungs.iter().zip(ladder) {
        let cert = envelope_feasible(h, module.basis(), mu, eps)?;
        let within = closure_feasible_within(h, module, mu, eps - STRICT_SLACK)?;
        out.checks
            .check("closure-consistent", within == rung.feasible, || {
                format!(
                    "{label} at {eps}: single solve {within}, ladder {}",
                    rung.feasible
                )
            });
        c_flags.push(within);
        if let (true, Some(w)) = (cert.is_feasible(), &cert.witness_values) {
            let worst = (0..h.len())
                .map(|x| h.value(x).norm() - w[x])
                .fold(f64::NEG_INFINITY, f64::max);
            let mass = mu.integrate_real(w);
            out.checks.check(
                "u-eps-witness",
                worst <= DOMINATION_TOLERANCE && mass < eps,
                || format!("{label} at {eps}: violation {worst:e}, mass {mass}"),
            );
        }
        if let (Some(m1), Some(m2)) = (&rung.m1, &rung.m2) {
            let (worst, mass) = recheck_envelope(h, m1, m2, mu.weights());
            out.checks.check(
                "closure-witness",
                worst <= DOMINATION_TOLERANCE && mass < eps,
                || format!("{label} at {eps}: violation {worst:e}, mass {mass}"),
            );
        }
        u_flags.push(cert.is_feasible());
        rows.push(vec![
            label.to_string(),
            num(eps),
            cert.is_feasible().to_string(),
            cert.min_mass.map(num).unwrap_or_default(),
            rung.feasible.to_string(),
            closure.min_mass.map(num).unwrap_or_default(),
        ]);
    }
    out.checks.check("u-eps-monotone", monotone(&u_flags), || {
        format!("{label}: {u_flags:?}")
    });
    out.checks
        .check("closure-monotone", monotone(&c_flags), || {
            format!("{label}: {c_flags:?}")
        });
    if out.tables.is_empty() {
        out.tables.push(Table::new(
            "ladder",
            &[
                "instance",
                "eps",
                "u_eps_feasible",
                "u_eps_min_mass",
                "closure_feasible",
                "closure_min_mass",
            ],
        ));
    }
    for r in rows {
        out.tables[0].push(r);
    }
    if detail {
        out.result(
            "closure",
            json!({"min_mass": closure.min_mass, "in_closure_at": closure.in_closure_at}),
        );
    }
    Ok(())
}

fn nesting(
    config: &ScenarioConfig,
    range: std::ops::Range<u64>,
    pairs: usize,
    out: &mut Outcome,
) -> Result<(), CliError> {
    let mut table = Table::new(
        "nesting",
        &[
            "instance",
            "eps_prime",
            "eps",
            "m_prime_mass",
            "witness_mass",
            "applicable",
            "violation",
        ],
    );
    let mut witnessed = 0usize;
    for i in range {
        let inst = corpus::nesting_instance(config.seed, i, pairs)?;
        let mu = inst.module.system().upstairs();
        let r = verify_nesting(&inst.module, mu, &inst.pairs, &inst.samples)?;
        for c in &r.cases {
            out.checks.check("nesting-applicable", c.applicable, || {
                format!(
                    "instance {i}: pair ({}, {}) not applicable",
                    c.eps_prime, c.eps
                )
            });
            out.checks
                .check("nesting-holds", c.violation.is_none(), || {
                    format!("instance {i}: {}", c.violation.clone().unwrap_or_default())
                });
            witnessed += usize::from(c.applicable && c.violation.is_none());
            table.push(vec![
                i.to_string(),
                num(c.eps_prime),
                num(c.eps),
                num(c.m_prime_mass),
                c.witness_mass.map(num).unwrap_or_default(),
                c.applicable.to_string(),
                c.violation.clone().unwrap_or_default(),
            ]);
        }
    }
    out.result("witnessed_pairs", witnessed);
    out.tables.push(table);
    Ok(())
}

fn double_closure(
    config: &ScenarioConfig,
    range: std::ops::Range<u64>,
    out: &mut Outcome,
) -> Result<(), CliError> {
    let mut table = Table::new(
        "double_closure",
        &["instance", "eps", "outer_mass", "final_mass", "status"],
    );
    for i in range {
        let inst = corpus::double_closure_instance(config.seed, i)?;
        let mu = inst.module.system().upstairs();
        let outer_mass = mu.integrate_real(&inst.a2.real_parts());
        match double_closure_certificate(&inst.h, &inst.a1, &inst.a2, &inst.module, inst.eps) {
            Ok(c) => {
                let (worst, mass) = recheck_envelope(&inst.h, &c.m1, &c.m2, mu.weights());
                out.checks.check(
                    "double-closure-certificate",
                    worst <= DOMINATION_TOLERANCE && mass < inst.eps,
                    || {
                        format!(
                            "instance {i}: violation {worst:e}, mass {mass} vs {}",
                            inst.eps
                        )
                    },
                );
                table.push(vec![
                    i.to_string(),
                    num(inst.eps),
                    num(outer_mass),
                    num(mass),
                    "certified".into(),
                ]);
            }
            Err(e) => {
                out.checks.check("double-closure-certificate", false, || {
                    format!("instance {i}: {e}")
                });
                table.push(vec![
                    i.to_string(),
                    num(inst.eps),
                    num(outer_mass),
                    String::new(),
                    e.to_string(),
                ]);
            }
        }
    }
    out.tables.push(table);
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PipelineParams {
    #[serde(default = "default_eps")]
    eps: Vec<f64>,
    #[serde(default)]
    taper: Vec<String>,
}

fn default_eps() -> Vec<f64> {
    vec![1.0, 0.1, 0.01]
}

pub fn pipeline(config: &ScenarioConfig) -> Result<Outcome, CliError> {
    let p: PipelineParams = config.params()?;
    decreasing(&p.eps)?;
    let mut out = Outcome::default();
    let instances = module_instances(config, &mut out)?;
    let mut budget = Table::new("budget", &["instance", "eps", "stage", "bound", "achieved"]);
    let mut certs = Table::new(
        "certificates",
        &[
            "instance",
            "eps",
            "eps1",
            "mass",
            "worst_violation",
            "status",
        ],
    );
    for (label, fx) in &instances {
        let phi = fx.descriptor()?;
        let target = fx.module.system().target();
        let taper = p
            .taper
            .iter()
            .map(|id| target.index_of(id))
            .collect::<fiberwise::Result<Vec<_>>>()?;
        let opts = PipelineOptions { taper };
        let weights = fx.module.system().upstairs().weights();
        for &eps in &p.eps {
            let cert = match main_theorem_pipeline(&phi, &fx.module, eps, &opts) {
                Ok(c) => c,
                Err(e) => {
                    out.checks.check("certificate-exists", false, || {
                        format!("{label} at {eps}: {e}")
                    });
                    certs.push(vec![
                        label.clone(),
                        num(eps),
                        String::new(),
                        String::new(),
                        String::new(),
                        e.to_string(),
                    ]);
                    continue;
                }
            };
            out.checks.check("certificate-exists", true, String::new);
            let (worst, mass) = recheck_envelope(&phi.function, &cert.m1, &cert.m2, weights);
            out.checks
                .check("domination", worst <= DOMINATION_TOLERANCE, || {
                    format!("{label} at {eps}: violation {worst:e}")
                });
            out.checks.check("mass-below-eps", mass < eps, || {
                format!("{label} at {eps}: mass {mass}")
            });
            let mut eps1 = String::new();
            if let CertificateLedger::MainTheorem(b) = &cert.ledger {
                out.checks.check(
                    "budget-inequality",
                    b.eps1 * b.budget_coefficient < eps,
                    || {
                        format!(
                            "{label} at {eps}: eps1 {} times {} not below eps",
                            b.eps1, b.budget_coefficient
                        )
                    },
                );
                for (stage, bound, achieved) in b.table() {
                    budget.push(vec![
                        label.clone(),
                        num(eps),
                        stage,
                        num(bound),
                        num(achieved),
                    ]);
                }
                eps1 = num(b.eps1);
            }
            certs.push(vec![
                label.clone(),
                num(eps),
                eps1,
                num(mass),
                num(worst),
                "certified".into(),
            ]);
            if instances.len() == 1 && eps == p.eps[p.eps.len() - 1] {
                out.result("certificate", &cert);
            }
        }
    }
    out.result("instances", instances.len());
    out.result("eps", &p.eps);
    out.tables.push(certs);
    out.tables.push(budget);
    Ok(out)
}
