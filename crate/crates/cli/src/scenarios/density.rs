use fiberwise::corpus::{self, streams};
use fiberwise::density::{
    transfer_convergence, verify_bad_set_estimates, MeasureSequence, SequenceRule,
};
use fiberwise::function_algebra::PullbackModule;
use fiberwise::tau_envelope::{
    main_theorem_pipeline, PipelineOptions, RiemannIntegrableDescriptor,
};
use serde::Deserialize;

use super::unknown_corpus;
use crate::config::{Fixture, ScenarioConfig};
use crate::fixtures::module_fixture;
use crate::report::{num, Outcome, Table};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Expect {
    Transfer,
    Rejected,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityParams {
    #[serde(default = "default_eps")]
    eps: Vec<f64>,
    #[serde(default = "default_horizon")]
    horizon: usize,
    #[serde(default = "default_expect")]
    expect: Expect,
}

fn default_eps() -> Vec<f64> {
    vec![0.5, 0.1]
}

fn default_horizon() -> usize {
    200
}

fn default_expect() -> Expect {
    Expect::Transfer
}

/// Default slack of the tail bound and of the module gate.
const DENSITY_TOLERANCE: f64 = 1e-6;

struct DensityCase {
    label: String,
    module: PullbackModule,
    phi: RiemannIntegrableDescriptor,
    rule: SequenceRule,
}

fn cases(config: &ScenarioConfig, out: &mut Outcome) -> Result<Vec<DensityCase>, CliError> {
    match config.fixture()? {
        Fixture::Inline(v) => {
            let fx = module_fixture(v)?;
            let rule = fx
                .sequence
                .clone()
                .ok_or_else(|| CliError::Config("density fixture needs a sequence".into()))?;
            Ok(vec![DensityCase {
                label: "inline".into(),
                phi: fx.descriptor()?,
                module: fx.module,
                rule,
            }])
        }
        Fixture::Corpus { kind, count, start } => {
            let adversarial = match kind.as_str() {
                "perturbation" => false,
                "adversarial" => true,
                other => return Err(unknown_corpus(config.scenario, other)),
            };
            out.streams.insert("density".into(), streams::DENSITY);
            Ok((*start..*start + *count)
                .map(|i| {
                    let inst = corpus::density_instance(config.seed, i);
                    let rule = if adversarial {
                        SequenceRule::Alternating { nu: inst.nu }
                    } else {
                        SequenceRule::Perturbation { nu: inst.nu }
                    };
                    DensityCase {
                        label: format!("{kind}-{i}"),
                        module: inst.module,
                        phi: inst.phi,
                        rule,
                    }
                })
                .collect())
        }
    }
}

pub fn density(config: &ScenarioConfig) -> Result<Outcome, CliError> {
    let p: DensityParams = config.params()?;
    if p.eps.is_empty() || p.eps.iter().any(|e| !(*e > 0.0)) {
        return Err(CliError::Config("eps values must be positive".into()));
    }
    let tol = config.tolerance.unwrap_or(DENSITY_TOLERANCE);
    let mut out = Outcome::default();
    let mut table = Table::new(
        "transfer",
        &[
            "instance",
            "eps",
            "hypothesis_holds",
            "tail_max_deviation",
            "bound",
            "limit_bound",
            "claimed",
        ],
    );
    for case in cases(config, &mut out)? {
        let label = &case.label;
        let mu = case.module.system().upstairs();
        let seq = MeasureSequence::new(mu.clone(), case.rule.clone())?;
        for &eps in &p.eps {
            let cert = match main_theorem_pipeline(
                &case.phi,
                &case.module,
                eps,
                &PipelineOptions::default(),
            ) {
                Ok(c) => c,
                Err(e) => {
                    out.checks.check("certificate-exists", false, || {
                        format!("{label} at {eps}: {e}")
                    });
                    continue;
                }
            };
            let r = transfer_convergence(
                &seq,
                &case.phi.function,
                &case.module,
                Some(&cert),
                eps,
                p.horizon,
                tol,
            )?;
            match p.expect {
                Expect::Transfer => {
                    out.checks.check("hypothesis-gate", r.hypothesis_holds, || {
                        format!(
                            "{label}: directions {:?} do not converge",
                            r.hypothesis.non_convergent
                        )
                    });
                    out.checks.check("triangle-chain", r.triangle_holds, || {
                        format!("{label} at {eps}")
                    });
                    let phi = case.phi.function.real_parts();
                    let limit = mu.integrate_real(&phi);
                    let (lo, hi) = r.tail_window;
                    let mut tail = 0.0f64;
                    for n in lo..=hi {
                        tail = tail.max((seq.term(n)?.integrate_real(&phi) - limit).abs());
                    }
                    out.checks.check("tail-bound", tail <= 2.0 * eps + tol, || {
                        format!(
                            "{label} at {eps}: tail deviation {tail} above {}",
                            2.0 * eps + tol
                        )
                    });
                }
                Expect::Rejected => {
                    out.checks.check(
                        "rejected-at-gate",
                        !r.hypothesis_holds && !r.transfer_claimed,
                        || format!("{label}: the module gate accepted a non-convergent sequence"),
                    );
                }
            }
            table.push(vec![
                label.clone(),
                num(eps),
                r.hypothesis_holds.to_string(),
                r.tail_max_deviation.map(num).unwrap_or_default(),
                num(2.0 * eps),
                r.limit_bound.map(num).unwrap_or_default(),
                r.transfer_claimed.to_string(),
            ]);
        }
    }
    out.result("horizon", p.horizon);
    out.result("eps", &p.eps);
    out.tables.push(table);
    Ok(out)
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct BadsetParams {}

pub fn badset(config: &ScenarioConfig) -> Result<Outcome, CliError> {
    let _: BadsetParams = config.params()?;
    let mut out = Outcome::default();
    let Fixture::Corpus { kind, count, start } = config.fixture()? else {
        return Err(CliError::Config(
            "badset fixtures come from the `valid` or `violated` corpus".into(),
        ));
    };
    out.streams.insert("badset".into(), streams::BADSET);
    let mut table = Table::new(
        "estimates",
        &["instance", "set", "points", "worst_margin", "holds"],
    );
    match kind.as_str() {
        "valid" => {
            for i in *start..*start + *count {
                let inst = corpus::badset_instance(config.seed, i)?;
                let fx = &inst.fixture;
                out.checks.check(
                    "overlap-constant",
                    fx.c_prime_g == inst.cover.bound() as f64
                        && inst.cover.multiplicity <= inst.cover.bound(),
                    || {
                        format!(
                            "instance {i}: c'_G {} vs multiplicity {}",
                            fx.c_prime_g, inst.cover.multiplicity
                        )
                    },
                );
                let r = verify_bad_set_estimates(fx)?;
                for c in &r.checks {
                    out.checks
                        .check(&format!("estimate:{}", c.set), c.holds, || {
                            format!("instance {i}: worst margin {}", c.worst_margin)
                        });
                    table.push(vec![
                        i.to_string(),
                        c.set.clone(),
                        c.points.to_string(),
                        num(c.worst_margin),
                        c.holds.to_string(),
                    ]);
                }
                out.checks
                    .check("final-mass", r.final_mass < r.final_bound, || {
                        format!("instance {i}: {} not below {}", r.final_mass, r.final_bound)
                    });
            }
            out.result("fixtures", count);
        }
        "violated" => {
            let fixtures = corpus::violated_badset_fixtures(config.seed)?;
            for (i, (fx, expected)) in fixtures.iter().enumerate() {
                let r = verify_bad_set_estimates(fx)?;
                let got = r.first_failure().map(str::to_string);
                out.checks.check(
                    "rejected-with-named-set",
                    !r.passed && got.as_deref() == Some(*expected),
                    || format!("fixture {i}: expected {expected}, got {got:?}"),
                );
                table.push(vec![
                    i.to_string(),
                    expected.to_string(),
                    String::new(),
                    String::new(),
                    got.unwrap_or_else(|| "accepted".into()),
                ]);
            }
            out.result("fixtures", fixtures.len());
        }
        other => return Err(unknown_corpus(config.scenario, other)),
    }
    out.tables.push(table);
    Ok(out)
}
