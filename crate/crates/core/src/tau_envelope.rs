//! Envelope topology: U_eps membership, closure certificates, the closure
//! lemmas and the main approximation pipeline.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::Serialize;

use crate::cheb_lp::{
    cheb_best_approx, cheb_raw, envelope_feasible, min_dominator, real_span, ClosureLp,
    ClosurePair, Dominator, FeasibilityCertificate, STRICT_SLACK,
};
use crate::error::{Error, Result};
use crate::fibered_space::{ensure_same, fibers_of, WeightedMeasure};
use crate::function_algebra::{
    conjugate_closure_check, pullback, sup_norm, PullbackModule, SampledFunction,
};
use crate::linalg::{self, CVec};
use crate::localization::preflight;

/// Pointwise slack for domination checks.
pub const DOMINATION_TOLERANCE: f64 = 1e-9;
/// Span residual accepted for "lies in the module".
pub const SPAN_TOLERANCE: f64 = 1e-9;
/// Safety factor applied to the eps1 budget.
pub const BUDGET_SAFETY: f64 = 0.9;

fn c64(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn real_fn(
    space: &std::sync::Arc<crate::fibered_space::FiniteSpace>,
    v: &[f64],
) -> SampledFunction {
    SampledFunction::real(space.clone(), v).expect("finite values on the right space")
}

fn mass(f: &SampledFunction, mu: &WeightedMeasure) -> f64 {
    f.values()
        .iter()
        .zip(mu.weights())
        .map(|(v, w)| v.re * w)
        .sum()
}

/// A function with a modeled discontinuity set. At each bad point the
/// function is only known up to a real interval `[lo, hi]`.
#[derive(Debug, Clone, Serialize)]
pub struct RiemannIntegrableDescriptor {
    pub function: SampledFunction,
    pub bad_points: Vec<usize>,
    pub bad_ranges: Vec<(f64, f64)>,
    pub support: Vec<usize>,
}

impl RiemannIntegrableDescriptor {
    /// Support is taken to be the nonzero set; bad points get the jump range
    /// between 0 and the value.
    pub fn new(function: SampledFunction, bad_points: Vec<usize>) -> Result<Self> {
        let ranges = bad_points
            .iter()
            .map(|&x| {
                let v = function.value(x).re;
                (v.min(0.0), v.max(0.0))
            })
            .collect();
        Self::with_ranges(function, bad_points, ranges)
    }

    pub fn with_ranges(
        function: SampledFunction,
        bad_points: Vec<usize>,
        bad_ranges: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if bad_points.len() != bad_ranges.len() {
            return Err(Error::Config("one range per bad point required".into()));
        }
        for (&x, &(lo, hi)) in bad_points.iter().zip(&bad_ranges) {
            if x >= function.len() {
                return Err(Error::Config(format!("bad point index {x} out of range")));
            }
            let v = function.value(x);
            if v.im != 0.0 || !(lo <= v.re && v.re <= hi) {
                return Err(Error::Config(format!(
                    "value at bad point {} must be real and inside [{lo}, {hi}]",
                    function.space().id(x)
                )));
            }
        }
        let support = (0..function.len())
            .filter(|&x| function.value(x) != c64(0.0) || bad_points.contains(&x))
            .collect();
        Ok(Self {
            function,
            bad_points,
            bad_ranges,
            support,
        })
    }

    pub fn bad_mass(&self, mu: &WeightedMeasure) -> f64 {
        mu.mass_of(&self.bad_points)
    }
}

/// Independent arithmetic check of `|phi - m1| <= m2`, `mu(m2) < eps`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CertificateCheck {
    pub worst_violation: f64,
    pub mass: f64,
    pub domination_ok: bool,
    pub mass_ok: bool,
}

impl CertificateCheck {
    pub fn passed(&self) -> bool {
        self.domination_ok && self.mass_ok
    }
}

pub fn check_certificate(
    phi: &SampledFunction,
    m1: &SampledFunction,
    m2: &SampledFunction,
    mu: &WeightedMeasure,
    eps: f64,
) -> CertificateCheck {
    let mut worst = f64::NEG_INFINITY;
    for x in 0..phi.len() {
        let lhs = (phi.value(x) - m1.value(x)).norm();
        let rhs = m2.value(x);
        let excess = if rhs.im.abs() > DOMINATION_TOLERANCE {
            f64::INFINITY
        } else {
            lhs - rhs.re
        };
        worst = worst.max(excess);
    }
    let m = mass(m2, mu);
    CertificateCheck {
        worst_violation: worst,
        mass: m,
        domination_ok: worst <= DOMINATION_TOLERANCE,
        mass_ok: m < eps,
    }
}

/// Budget bookkeeping of the main pipeline.
#[derive(Debug, Clone, Serialize)]
pub struct BudgetLedger {
    pub eps: f64,
    pub eps1: f64,
    pub cutoff_c: SampledFunction,
    pub dominating_mc: SampledFunction,
    /// `"lp-minimal"` or `"pointwise-sum"`.
    pub mc_source: String,
    pub sandwich_c1: SampledFunction,
    pub sandwich_c2: SampledFunction,
    pub sw_m1: SampledFunction,
    pub sw_m2: SampledFunction,
    pub mc_sup: f64,
    pub mc_mass: f64,
    pub c_sup: f64,
    pub c2_mass: f64,
    pub sw_m1_error: f64,
    pub sw_m2_error: f64,
    /// `3 |mc| + mu(mc)`.
    pub budget_coefficient: f64,
    /// `|c| + 3 mu(mc)`, the coefficient the estimate chain actually yields.
    pub chain_coefficient: f64,
    pub final_mass: f64,
}

impl BudgetLedger {
    /// Table rows `(stage, bound, achieved)`.
    pub fn table(&self) -> Vec<(String, f64, f64)> {
        vec![
            (
                "eps1 * (3|mc| + mu(mc))".into(),
                self.eps,
                self.eps1 * self.budget_coefficient,
            ),
            ("mu(c2)".into(), self.eps1, self.c2_mass),
            ("|c1 - m1|".into(), self.eps1, self.sw_m1_error),
            ("|c2 - m2|".into(), self.eps1, self.sw_m2_error),
            (
                "mu(m2')".into(),
                self.eps1 * self.chain_coefficient,
                self.final_mass,
            ),
            ("mu(m2') < eps".into(), self.eps, self.final_mass),
        ]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosureModuleLedger {
    pub delta_a: f64,
    pub dominator_mass: f64,
    pub algebra_coefficients: Vec<Complex64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpliceLedger {
    pub eps1: f64,
    pub c_sup: f64,
    pub good_mass: f64,
    pub h3_mass: f64,
    pub spliced_mass: f64,
    pub spliced_bound: f64,
    pub delta_a: f64,
    pub final_mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecombinedLedger {
    pub outer_mass: f64,
    pub inner_masses: [f64; 2],
    pub final_mass: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CertificateLedger {
    MainTheorem(Box<BudgetLedger>),
    ClosureModule(ClosureModuleLedger),
    Splice(SpliceLedger),
    Recombined(RecombinedLedger),
}

/// A two-sided envelope `|phi - m1| <= m2`, `mu(m2) < eps`.
#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeCertificate {
    pub m1: SampledFunction,
    pub m2: SampledFunction,
    pub eps: f64,
    pub check: CertificateCheck,
    pub m1_span_residual: f64,
    pub m2_span_residual: f64,
    pub ledger: CertificateLedger,
}

fn certificate(
    phi: &SampledFunction,
    m1: SampledFunction,
    m2: SampledFunction,
    module: &PullbackModule,
    eps: f64,
    ledger: CertificateLedger,
) -> Result<EnvelopeCertificate> {
    let mu = module.system().upstairs();
    let check = check_certificate(phi, &m1, &m2, mu, eps);
    if !check.passed() {
        return Err(Error::Budget {
            stage: "certificate re-verification".into(),
            achieved: if check.domination_ok {
                check.mass
            } else {
                check.worst_violation
            },
            required: if check.domination_ok {
                eps
            } else {
                DOMINATION_TOLERANCE
            },
        });
    }
    Ok(EnvelopeCertificate {
        m1_span_residual: module.span_residual(&m1),
        m2_span_residual: module.real_span_residual(&m2),
        m1,
        m2,
        eps,
        check,
        ledger,
    })
}

/// Membership of `h` in `U_eps` over the real span of the module.
pub fn membership_u_eps(
    h: &SampledFunction,
    module: &PullbackModule,
    mu: &WeightedMeasure,
    eps: f64,
) -> Result<FeasibilityCertificate> {
    envelope_feasible(h, module.basis(), mu, eps)
}

/// One rung of a closure ladder.
#[derive(Debug, Clone, Serialize)]
pub struct ClosureRung {
    pub eps: f64,
    pub feasible: bool,
    pub m1: Option<SampledFunction>,
    pub m2: Option<SampledFunction>,
    pub mass: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosureReport {
    /// Smallest achievable `mu(m2)`, absent when no `m2` dominates at all.
    pub min_mass: Option<f64>,
    pub rungs: Vec<ClosureRung>,
    /// The smallest rung when every rung is feasible.
    pub in_closure_at: Option<f64>,
}

fn closure_inputs(module: &PullbackModule) -> (Vec<CVec>, Vec<Vec<f64>>) {
    let basis: Vec<CVec> = module.basis().iter().map(|b| b.values().to_vec()).collect();
    let span: Vec<Vec<f64>> = module.real_basis().iter().map(|b| b.real_parts()).collect();
    (basis, span)
}

fn pair_functions(module: &PullbackModule, p: &ClosurePair) -> (SampledFunction, SampledFunction) {
    let src = module.system().source();
    (
        SampledFunction::new(src.clone(), p.m1.clone()).expect("finite LP output"),
        real_fn(src, &p.m2),
    )
}

/// Minimal-mass closure pair for `h`: `|h - m1| <= m2` with `m1`, `m2` in
/// the module.
pub fn closure_pair(
    h: &SampledFunction,
    module: &PullbackModule,
    mu: &WeightedMeasure,
) -> Result<Option<(SampledFunction, SampledFunction, f64)>> {
    ensure_same(
        h.space(),
        module.system().source(),
        "function not on the module source",
    )?;
    let (basis, span) = closure_inputs(module);
    let lp = ClosureLp::new(h.values(), &basis, &span, mu.weights());
    Ok(lp.minimize()?.map(|p| {
        let (m1, m2) = pair_functions(module, &p);
        (m1, m2, p.mass)
    }))
}

/// Phase-one test of the closure system with `mu(m2) <= budget`.
pub fn closure_feasible_within(
    h: &SampledFunction,
    module: &PullbackModule,
    mu: &WeightedMeasure,
    budget: f64,
) -> Result<bool> {
    let (basis, span) = closure_inputs(module);
    let lp = ClosureLp::new(h.values(), &basis, &span, mu.weights());
    Ok(lp.feasible_within(budget)?.is_some())
}

pub fn closure_membership(
    h: &SampledFunction,
    module: &PullbackModule,
    mu: &WeightedMeasure,
    eps_ladder: &[f64],
) -> Result<ClosureReport> {
    if eps_ladder.iter().any(|e| !(*e > 0.0)) || eps_ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Argument(
            "ladder must be positive and strictly decreasing".into(),
        ));
    }
    let best = closure_pair(h, module, mu)?;
    let rungs: Vec<ClosureRung> = eps_ladder
        .iter()
        .map(|&eps| match &best {
            Some((m1, m2, m)) if *m <= eps - STRICT_SLACK => ClosureRung {
                eps,
                feasible: true,
                m1: Some(m1.clone()),
                m2: Some(m2.clone()),
                mass: Some(*m),
            },
            _ => ClosureRung {
                eps,
                feasible: false,
                m1: None,
                m2: None,
                mass: None,
            },
        })
        .collect();
    let in_closure_at = if rungs.iter().all(|r| r.feasible) {
        eps_ladder.last().copied()
    } else {
        None
    };
    Ok(ClosureReport {
        min_mass: best.map(|b| b.2),
        rungs,
        in_closure_at,
    })
}

/// Outcome of one nesting trial.
#[derive(Debug, Clone, Serialize)]
pub struct NestingCase {
    pub sample: usize,
    pub eps_prime: f64,
    pub eps: f64,
    /// False when `h` is not in `U'_{eps'}` with the constructed `m'`, or
    /// when `m'` has no closure certificate at `delta / 2`.
    pub applicable: bool,
    pub m_prime_mass: f64,
    pub witness_mass: Option<f64>,
    pub violation: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NestingReport {
    pub cases: Vec<NestingCase>,
    pub checked: usize,
    pub violations: usize,
}

/// The element `m'` of the closure used as the `U'` dominator of `h`: the
/// minimal module dominator plus a unit spike at each null point of `mu`.
pub fn closure_dominator(
    h: &SampledFunction,
    module: &PullbackModule,
    mu: &WeightedMeasure,
) -> Result<Option<SampledFunction>> {
    let span: Vec<Vec<f64>> = module.real_basis().iter().map(|b| b.real_parts()).collect();
    match min_dominator(&h.moduli(), &span, mu.weights())? {
        Dominator::Found { values, .. } => {
            let src = h.space();
            let mut v = values;
            for x in src.finite_indices() {
                if mu.weight(x) == 0.0 {
                    v[x] += 1.0;
                }
            }
            Ok(Some(real_fn(src, &v)))
        }
        Dominator::Separated { .. } => Ok(None),
    }
}

pub fn verify_nesting(
    module: &PullbackModule,
    mu: &WeightedMeasure,
    eps_pairs: &[(f64, f64)],
    samples: &[SampledFunction],
) -> Result<NestingReport> {
    let mut cases = Vec::new();
    for &(ep, e) in eps_pairs {
        if !(ep > 0.0 && ep < e) {
            return Err(Error::Argument(format!(
                "need 0 < eps' < eps, got ({ep}, {e})"
            )));
        }
    }
    for (i, h) in samples.iter().enumerate() {
        let m_prime = closure_dominator(h, module, mu)?;
        for &(ep, e) in eps_pairs {
            let delta = e - ep;
            let Some(mp) = &m_prime else {
                cases.push(NestingCase {
                    sample: i,
                    eps_prime: ep,
                    eps: e,
                    applicable: false,
                    m_prime_mass: f64::INFINITY,
                    witness_mass: None,
                    violation: None,
                });
                continue;
            };
            let mp_mass = mass(mp, mu);
            let mut case = NestingCase {
                sample: i,
                eps_prime: ep,
                eps: e,
                applicable: false,
                m_prime_mass: mp_mass,
                witness_mass: None,
                violation: None,
            };
            if mp_mass < ep {
                if let Some((n1, n2, n2_mass)) = closure_pair(mp, module, mu)? {
                    if n2_mass < delta / 2.0 {
                        case.applicable = true;
                        let w = n1.plus(&n2)?;
                        let wm = mass(&w, mu);
                        case.witness_mass = Some(wm);
                        let worst = (0..h.len())
                            .map(|x| h.value(x).norm() - w.value(x).re)
                            .fold(f64::NEG_INFINITY, f64::max);
                        if worst > DOMINATION_TOLERANCE {
                            case.violation = Some(format!("|h| exceeds n1 + n2 by {worst:e}"));
                        } else if !(wm < e) {
                            case.violation = Some(format!("mass {wm} not below {e}"));
                        } else if envelope_feasible(h, module.basis(), mu, e)?.is_feasible() {
                            // the LP agrees that h lies in U_eps
                        } else {
                            case.violation = Some("LP rejects h at eps".into());
                        }
                    }
                }
            }
            cases.push(case);
        }
    }
    let checked = cases.iter().filter(|c| c.applicable).count();
    let violations = cases.iter().filter(|c| c.violation.is_some()).count();
    Ok(NestingReport {
        cases,
        checked,
        violations,
    })
}

/// LP-minimal `n` in the real module span with `n >= |m|`.
pub fn find_dominating(m: &SampledFunction, module: &PullbackModule) -> Result<SampledFunction> {
    ensure_same(
        m.space(),
        module.system().source(),
        "function not on the module source",
    )?;
    let span: Vec<Vec<f64>> = module.real_basis().iter().map(|b| b.real_parts()).collect();
    let mu = module.system().upstairs();
    match min_dominator(&m.moduli(), &span, mu.weights())? {
        Dominator::Found { values, .. } => Ok(real_fn(m.space(), &values)),
        Dominator::Separated { point } => Err(Error::hypothesis(
            "condition (3): every module element has a dominator",
            format!(
                "no module element dominates at point {}",
                m.space().id(point)
            ),
        )),
    }
}

/// A module element with value 1 at `x` and nonnegative everywhere.
pub fn find_positive_at(x: usize, module: &PullbackModule) -> Result<SampledFunction> {
    let src = module.system().source();
    if x >= src.len() || src.is_infinity(x) {
        return Err(Error::Argument(
            "point must be a finite point of the source".into(),
        ));
    }
    let n_x = module
        .basis()
        .iter()
        .max_by(|a, b| a.value(x).norm().total_cmp(&b.value(x).norm()));
    let Some(n_x) = n_x.filter(|b| b.value(x).norm() > 1e-12) else {
        return Err(Error::hypothesis(
            "condition (2): fiberwise density",
            format!("every module element vanishes at {}", src.id(x)),
        ));
    };
    let m_x = find_dominating(n_x, module)?;
    let v = m_x.value(x).re;
    if !(v > 0.0) {
        return Err(Error::hypothesis(
            "condition (3): every module element has a dominator",
            format!("dominator vanishes at {}", src.id(x)),
        ));
    }
    Ok(m_x.scaled(c64(1.0 / v)))
}

/// The sandwich `|phi - c1| <= c2` with `c2` carried by the bad points.
pub fn bourbaki_sandwich(
    phi: &RiemannIntegrableDescriptor,
    mu: &WeightedMeasure,
    eps1: f64,
) -> Result<(SampledFunction, SampledFunction)> {
    ensure_same(
        phi.function.space(),
        mu.space(),
        "function and measure on different spaces",
    )?;
    let space = phi.function.space();
    let mut c1 = phi.function.values().to_vec();
    let mut c2 = vec![0.0; space.len()];
    for (&x, &(lo, hi)) in phi.bad_points.iter().zip(&phi.bad_ranges) {
        c1[x] = c64((lo + hi) / 2.0);
        c2[x] = (hi - lo) / 2.0;
    }
    let c2 = real_fn(space, &c2);
    let m = mass(&c2, mu);
    if m > eps1 {
        return Err(Error::Budget {
            stage: "sandwich: oscillation mass exceeds eps1, refine the bad-point model".into(),
            achieved: m,
            required: eps1,
        });
    }
    Ok((SampledFunction::new(space.clone(), c1)?, c2))
}

/// Which preflight condition a module fails, if any.
#[derive(Debug, Clone, Serialize)]
pub struct TheoremPreflight {
    pub conjugation_closed: bool,
    pub fiber_dense: bool,
    pub dominators_exist: bool,
    pub algebra_dense: bool,
    pub module_closed: bool,
}

impl TheoremPreflight {
    pub fn passed(&self) -> bool {
        self.conjugation_closed
            && self.fiber_dense
            && self.dominators_exist
            && self.algebra_dense
            && self.module_closed
    }

    fn first_failure(&self) -> Option<&'static str> {
        if !self.conjugation_closed {
            Some("condition (1): stable under conjugation")
        } else if !self.fiber_dense {
            Some("condition (2): fiberwise density")
        } else if !self.dominators_exist {
            Some("condition (3): every module element has a dominator")
        } else if !self.algebra_dense {
            Some("algebra dense on the image")
        } else if !self.module_closed {
            Some("module closed under the algebra")
        } else {
            None
        }
    }
}

pub fn theorem_preflight(module: &PullbackModule) -> Result<TheoremPreflight> {
    let pre = preflight(module)?;
    let conj = conjugate_closure_check(module).closed;
    let fiber_dense = fibers_of(module.system().map())
        .into_iter()
        .filter(|(y, xs)| !xs.is_empty() && !module.system().target().is_infinity(*y))
        .all(|(_, xs)| {
            let cols: Vec<CVec> = module
                .basis()
                .iter()
                .map(|b| xs.iter().map(|&x| b.value(x)).collect())
                .collect();
            linalg::orthonormalize(&cols, 1e-10).q.len() == xs.len()
        });
    let mut dominators_exist = true;
    for b in module.real_basis() {
        if find_dominating(b, module).is_err() {
            dominators_exist = false;
            break;
        }
    }
    Ok(TheoremPreflight {
        conjugation_closed: conj,
        fiber_dense,
        dominators_exist,
        algebra_dense: pre.algebra_distance <= crate::localization::DENSITY_TOLERANCE,
        module_closed: pre.closure_residual <= crate::localization::CLOSURE_TOLERANCE,
    })
}

/// Options of the main pipeline.
#[derive(Debug, Clone, Default)]
pub struct PipelineOptions {
    /// Target points where the cutoff takes the value 1/2.
    pub taper: Vec<usize>,
}

fn cutoff(
    phi: &RiemannIntegrableDescriptor,
    module: &PullbackModule,
    opts: &PipelineOptions,
) -> Result<SampledFunction> {
    let map = module.system().map();
    let y = module.system().target();
    let mut c = vec![0.0; y.len()];
    for &t in &opts.taper {
        if t >= y.len() || y.is_infinity(t) {
            return Err(Error::Config(
                "taper point must be a finite target point".into(),
            ));
        }
        c[t] = 0.5;
    }
    for &x in &phi.support {
        c[map.image_of(x)] = 1.0;
    }
    if let Some(inf) = y.infinity() {
        if c[inf] != 0.0 {
            return Err(Error::Config(
                "support of phi reaches the infinity point".into(),
            ));
        }
    }
    Ok(real_fn(y, &c))
}

fn coefficient_pair(mc: &SampledFunction, c_sup: f64, mu: &WeightedMeasure) -> (f64, f64) {
    let s = sup_norm(mc);
    let m = mass(mc, mu);
    (3.0 * s + m, c_sup + 3.0 * m)
}

/// A dominator of `p*c` in the module, preferring the one with the looser
/// budget.
fn dominator_of_cutoff(
    pc: &SampledFunction,
    c_sup: f64,
    module: &PullbackModule,
) -> Result<(SampledFunction, String)> {
    let mu = module.system().upstairs();
    let src = module.system().source();
    let mut sum = vec![0.0; src.len()];
    for x in 0..src.len() {
        if pc.value(x).re > 0.0 {
            let m_x = find_positive_at(x, module)?;
            for (s, v) in sum.iter_mut().zip(m_x.values()) {
                *s += v.re;
            }
        }
    }
    let lambda = (0..src.len())
        .filter(|&x| pc.value(x).re > 0.0)
        .map(|x| pc.value(x).re / sum[x])
        .fold(0.0, f64::max);
    let summed = real_fn(src, &sum.iter().map(|s| s * lambda).collect::<Vec<_>>());
    let lp = find_dominating(pc, module)?;
    let cost = |m: &SampledFunction| {
        let (a, b) = coefficient_pair(m, c_sup, mu);
        a.max(b)
    };
    if cost(&lp) <= cost(&summed) {
        Ok((lp, "lp-minimal".into()))
    } else {
        Ok((summed, "pointwise-sum".into()))
    }
}

fn module_element(module: &PullbackModule, coeffs: &[Complex64]) -> SampledFunction {
    let src = module.system().source();
    let mut v = vec![c64(0.0); src.len()];
    for (b, c) in module.basis().iter().zip(coeffs) {
        for (vk, bk) in v.iter_mut().zip(b.values()) {
            *vk += c * bk;
        }
    }
    SampledFunction::new(src.clone(), v).expect("finite combination")
}

pub fn main_theorem_pipeline(
    phi: &RiemannIntegrableDescriptor,
    module: &PullbackModule,
    eps: f64,
    opts: &PipelineOptions,
) -> Result<EnvelopeCertificate> {
    if !(eps > 0.0) {
        return Err(Error::Argument(format!("eps must be positive, got {eps}")));
    }
    let f = &phi.function;
    ensure_same(
        f.space(),
        module.system().source(),
        "phi not on the module source",
    )?;
    let pre = theorem_preflight(module)?;
    if let Some(cond) = pre.first_failure() {
        return Err(Error::hypothesis(cond, "module preflight failed"));
    }
    let mu = module.system().upstairs();
    let map = module.system().map();
    let src = module.system().source();

    let c = cutoff(phi, module, opts)?;
    let pc = pullback(map, &c)?;
    let c_sup = sup_norm(&c);
    let (mc, mc_source) = dominator_of_cutoff(&pc, c_sup, module)?;
    let (budget_coefficient, chain_coefficient) = coefficient_pair(&mc, c_sup, mu);
    let eps1 = BUDGET_SAFETY * eps / budget_coefficient.max(chain_coefficient).max(1e-300);

    let (c1, c2) = bourbaki_sandwich(phi, mu, eps1)?;
    let pts = src.finite_indices();
    let s1 = cheb_best_approx(&c1, module.basis(), &pts)?;
    if !(s1.distance < eps1) {
        return Err(Error::Budget {
            stage: "module approximation of c1".into(),
            achieved: s1.distance,
            required: eps1,
        });
    }
    let s2 = cheb_best_approx(&c2, module.basis(), &pts)?;
    let m1 = module_element(module, &s1.coefficients);
    let m2 = real_fn(src, &module_element(module, &s2.coefficients).real_parts());
    let sw_m2_error = sup_norm(&c2.minus(&m2)?);
    if !(sw_m2_error < eps1) {
        return Err(Error::Budget {
            stage: "module approximation of c2".into(),
            achieved: sw_m2_error,
            required: eps1,
        });
    }
    let m1p = pc.times(&m1)?;
    let m2p = pc.times(&m2)?.plus(&mc.scaled(c64(2.0 * eps1)))?;
    let final_mass = mass(&m2p, mu);
    let ledger = BudgetLedger {
        eps,
        eps1,
        c2_mass: mass(&c2, mu),
        cutoff_c: c,
        mc_sup: sup_norm(&mc),
        mc_mass: mass(&mc, mu),
        dominating_mc: mc,
        mc_source,
        sandwich_c1: c1,
        sandwich_c2: c2,
        sw_m1_error: s1.distance,
        sw_m2_error,
        sw_m1: m1,
        sw_m2: m2,
        c_sup,
        budget_coefficient,
        chain_coefficient,
        final_mass,
    };
    certificate(
        f,
        m1p,
        m2p,
        module,
        eps,
        CertificateLedger::MainTheorem(Box::new(ledger)),
    )
}

/// Algebra approximant of `c` on the image of `p`, with its sup error there.
fn algebra_approximant(
    c: &SampledFunction,
    module: &PullbackModule,
) -> Result<(SampledFunction, f64, Vec<Complex64>)> {
    let image = module.system().map().finite_image();
    let y = module.system().target();
    let alg = module.algebra_basis();
    let cols: Vec<CVec> = alg
        .iter()
        .map(|a| image.iter().map(|&t| a.value(t)).collect())
        .collect();
    let target: CVec = image.iter().map(|&t| c.value(t)).collect();
    let sol = cheb_raw(&target, &cols)?;
    let mut v = vec![c64(0.0); y.len()];
    for (a, k) in alg.iter().zip(&sol.coefficients) {
        for (vk, ak) in v.iter_mut().zip(a.values()) {
            *vk += k * ak;
        }
    }
    Ok((
        SampledFunction::new(y.clone(), v)?,
        sol.distance,
        sol.coefficients,
    ))
}

/// Certificate for `(p*c) m` from an algebra approximant of `c`.
pub fn closure_module_mult(
    c: &SampledFunction,
    m: &SampledFunction,
    module: &PullbackModule,
    eps: f64,
) -> Result<EnvelopeCertificate> {
    if !(eps > 0.0) {
        return Err(Error::Argument(format!("eps must be positive, got {eps}")));
    }
    ensure_same(
        c.space(),
        module.system().target(),
        "cutoff not on the target",
    )?;
    let mu = module.system().upstairs();
    let map = module.system().map();
    let n = find_dominating(m, module)?;
    let n_mass = mass(&n, mu);
    let (a, delta, coeffs) = algebra_approximant(c, module)?;
    let m2_mass = delta * n_mass;
    if !(m2_mass <= eps - STRICT_SLACK) {
        return Err(Error::Budget {
            stage: "algebra approximant of the multiplier".into(),
            achieved: m2_mass,
            required: eps,
        });
    }
    let target = pullback(map, c)?.times(m)?;
    let m1 = pullback(map, &a)?.times(m)?;
    let m2 = n.scaled(c64(delta));
    certificate(
        &target,
        m1,
        m2,
        module,
        eps,
        CertificateLedger::ClosureModule(ClosureModuleLedger {
            delta_a: delta,
            dominator_mass: n_mass,
            algebra_coefficients: coeffs,
        }),
    )
}

/// Splices a good-region certificate with a bad-set majorant `h3` and
/// returns to the module through an algebra approximant of the cutoff.
pub fn density_theorem_splice(
    phi: &RiemannIntegrableDescriptor,
    module: &PullbackModule,
    c: &SampledFunction,
    bad_set: &[usize],
    h3: &SampledFunction,
    eps: f64,
) -> Result<EnvelopeCertificate> {
    if !(eps > 0.0) {
        return Err(Error::Argument(format!("eps must be positive, got {eps}")));
    }
    let f = &phi.function;
    let system = module.system();
    let mu = system.upstairs();
    let map = system.map();
    let src = system.source();
    ensure_same(f.space(), src, "phi not on the module source")?;
    ensure_same(h3.space(), src, "h3 not on the module source")?;
    ensure_same(c.space(), system.target(), "cutoff not on the target")?;
    if c.values().iter().any(|v| v.im != 0.0 || v.re < 0.0) {
        return Err(Error::hypothesis(
            "cutoff",
            "c must be real and nonnegative",
        ));
    }
    let cp = pullback(map, c)?;
    if phi
        .support
        .iter()
        .any(|&x| (cp.value(x) - c64(1.0)).norm() > 1e-12)
    {
        return Err(Error::hypothesis(
            "cutoff",
            "p*c must equal 1 on the support of phi",
        ));
    }
    if (0..src.len()).any(|x| h3.value(x).im != 0.0 || h3.value(x).re < 0.0) {
        return Err(Error::hypothesis(
            "bad-set majorant",
            "h3 must be real and nonnegative",
        ));
    }
    let c_sup = sup_norm(c);
    let eps1 = BUDGET_SAFETY * eps / (2.0 * (c_sup + 1.0));

    let bad: BTreeSet<usize> = bad_set.iter().copied().collect();
    let active: Vec<bool> = (0..src.len()).map(|x| !bad.contains(&x)).collect();
    let (basis, span) = closure_inputs(module);
    let lp = ClosureLp::new(f.values(), &basis, &span, mu.weights()).restricted_to(active);
    let pair = lp.minimize()?.ok_or_else(|| {
        Error::hypothesis(
            "good-region certificate",
            "no module pair dominates on the good region",
        )
    })?;
    if !(pair.mass < eps1) {
        return Err(Error::Budget {
            stage: "good-region certificate".into(),
            achieved: pair.mass,
            required: eps1,
        });
    }
    let (h1, h2) = pair_functions(module, &pair);
    let h3_mass = mass(h3, mu);
    if !(h3_mass < eps1) {
        return Err(Error::Budget {
            stage: "bad-set majorant mass".into(),
            achieved: h3_mass,
            required: eps1,
        });
    }
    let ch1 = cp.times(&h1)?;
    let ch2 = cp.times(&h2)?;
    for &x in &bad {
        let need = (f.value(x) - ch1.value(x)).norm() + ch2.value(x).re;
        if need > h3.value(x).re + DOMINATION_TOLERANCE {
            return Err(Error::hypothesis(
                "bad-set majorant",
                format!(
                    "h3 too small at {}: needs {need}, has {}",
                    src.id(x),
                    h3.value(x).re
                ),
            ));
        }
    }
    let spliced = ch2.plus(h3)?;
    let spliced_mass = mass(&spliced, mu);

    let n1 = find_dominating(&h1, module)?;
    let n2 = find_dominating(&h2, module)?;
    let (a, delta, _) = algebra_approximant(c, module)?;
    let pa = pullback(map, &a)?;
    let m1 = pa.times(&h1)?;
    let pah2 = real_fn(src, &pa.times(&h2)?.real_parts());
    let m2 = pah2
        .plus(&n2.scaled(c64(delta)))?
        .plus(h3)?
        .plus(&n1.scaled(c64(delta)))?;
    let final_mass = mass(&m2, mu);
    let ledger = SpliceLedger {
        eps1,
        c_sup,
        good_mass: pair.mass,
        h3_mass,
        spliced_mass,
        spliced_bound: (c_sup + 1.0) * eps1,
        delta_a: delta,
        final_mass,
    };
    certificate(f, m1, m2, module, eps, CertificateLedger::Splice(ledger))
}

/// Recombines an outer certificate `|h - a1| <= a2` at `eps/2` with inner
/// certificates `|a1 - b1| <= b2` and `|a2 - k1| <= k2`:
/// `|h - b1| <= k1 + k2 + b2`.
pub fn splice_double_closure(
    h: &SampledFunction,
    outer: (&SampledFunction, &SampledFunction),
    inner_a1: (&SampledFunction, &SampledFunction),
    inner_a2: (&SampledFunction, &SampledFunction),
    module: &PullbackModule,
    eps: f64,
) -> Result<EnvelopeCertificate> {
    let mu = module.system().upstairs();
    let outer_mass = mass(outer.1, mu);
    let m1 = inner_a1.0.clone();
    let m2 = real_fn(
        h.space(),
        &inner_a2.0.plus(inner_a2.1)?.plus(inner_a1.1)?.real_parts(),
    );
    let final_mass = mass(&m2, mu);
    certificate(
        h,
        m1,
        m2,
        module,
        eps,
        CertificateLedger::Recombined(RecombinedLedger {
            outer_mass,
            inner_masses: [mass(inner_a1.1, mu), mass(inner_a2.1, mu)],
            final_mass,
        }),
    )
}

/// Builds the inner certificates for `a1` and `a2` at `eps/6` each with the
/// closure LP and splices them.
pub fn double_closure_certificate(
    h: &SampledFunction,
    a1: &SampledFunction,
    a2: &SampledFunction,
    module: &PullbackModule,
    eps: f64,
) -> Result<EnvelopeCertificate> {
    let mu = module.system().upstairs();
    let outer = check_certificate(h, a1, a2, mu, eps / 2.0);
    if !outer.passed() {
        return Err(Error::hypothesis(
            "outer certificate",
            format!(
                "(a1, a2) is not a certificate at eps/2: violation {:e}, mass {}",
                outer.worst_violation, outer.mass
            ),
        ));
    }
    let inner = |g: &SampledFunction, stage: &str| -> Result<(SampledFunction, SampledFunction)> {
        match closure_pair(g, module, mu)? {
            Some((n1, n2, m)) if m < eps / 6.0 => Ok((n1, n2)),
            Some((_, _, m)) => Err(Error::Budget {
                stage: stage.into(),
                achieved: m,
                required: eps / 6.0,
            }),
            None => Err(Error::hypothesis(stage, "no closure pair exists")),
        }
    };
    let (b1, b2) = inner(a1, "inner certificate of a1")?;
    let (k1, k2) = inner(a2, "inner certificate of a2")?;
    splice_double_closure(h, (a1, a2), (&b1, &b2), (&k1, &k2), module, eps)
}

/// Real span basis of the module as plain vectors; used by callers that
/// need the U_eps LP repeatedly.
pub fn module_real_span(module: &PullbackModule) -> Vec<Vec<f64>> {
    real_span(module.basis())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fibered_space::{FiberedMap, FiberedSystem, FiniteSpace};
    use crate::function_algebra::BaseAlgebra;
    use std::sync::Arc;

    fn system(assign: Vec<usize>, ny: usize, w: Vec<f64>) -> Arc<FiberedSystem> {
        let x = Arc::new(FiniteSpace::numbered("x", assign.len()));
        let y = Arc::new(FiniteSpace::numbered("y", ny));
        let map = FiberedMap::new(x.clone(), y, assign).unwrap();
        Arc::new(FiberedSystem::new(map, WeightedMeasure::new(x, w).unwrap()).unwrap())
    }

    fn separating(sys: &Arc<FiberedSystem>) -> PullbackModule {
        let alg = BaseAlgebra::all_functions(sys.target().clone());
        let gens = (0..sys.source().len())
            .map(|i| SampledFunction::indicator(sys.source().clone(), &[i]).unwrap())
            .collect();
        PullbackModule::new(sys.clone(), alg, gens, 1).unwrap()
    }

    fn pullback_only(sys: &Arc<FiberedSystem>) -> PullbackModule {
        let alg = BaseAlgebra::all_functions(sys.target().clone());
        let one = SampledFunction::constant(sys.source().clone(), c64(1.0));
        PullbackModule::new(sys.clone(), alg, vec![one], 1).unwrap()
    }

    #[test]
    fn zero_is_in_every_u_eps() {
        let sys = system(vec![0, 0, 1], 2, vec![1.0; 3]);
        let m = pullback_only(&sys);
        let z = SampledFunction::zero(sys.source().clone());
        for eps in [1e-3, 1.0] {
            assert!(membership_u_eps(&z, &m, sys.upstairs(), eps)
                .unwrap()
                .is_feasible());
        }
    }

    #[test]
    fn u_eps_mass_threshold() {
        // |m0| in the module with mass 1: feasible at 2, not at 0.5
        let sys = system(vec![0, 1, 2], 3, vec![0.5, 0.25, 0.25]);
        let m = pullback_only(&sys);
        let h = SampledFunction::real(sys.source().clone(), &[1.0, -1.0, 1.0]).unwrap();
        let c = membership_u_eps(&h, &m, sys.upstairs(), 0.5).unwrap();
        assert!(!c.is_feasible());
        assert!((c.min_mass.unwrap() - 1.0).abs() < 1e-12);
        let c2 = membership_u_eps(&h, &m, sys.upstairs(), 2.0).unwrap();
        assert!(c2.is_feasible());
    }

    #[test]
    fn closure_of_two_atom_fiber() {
        let sys = system(vec![0, 0], 1, vec![1.0, 1.0]);
        let m = pullback_only(&sys);
        let h = SampledFunction::indicator(sys.source().clone(), &[0]).unwrap();
        let r = closure_membership(&h, &m, sys.upstairs(), &[1.5, 1.0, 0.4]).unwrap();
        assert!((r.min_mass.unwrap() - 1.0).abs() < 1e-9);
        assert!(r.rungs[0].feasible);
        assert!(!r.rungs[1].feasible);
        assert!(!r.rungs[2].feasible);
        let m1 = r.rungs[0].m1.as_ref().unwrap();
        let m2 = r.rungs[0].m2.as_ref().unwrap();
        assert!(check_certificate(&h, m1, m2, sys.upstairs(), 1.5).passed());
        // the hand witness: m1 = m2 = 1/2 on the fiber
        assert!((m2.value(0).re - 0.5).abs() < 1e-9 && (m2.value(1).re - 0.5).abs() < 1e-9);
    }

    #[test]
    fn closure_of_spike() {
        // module = constants on 3 points of equal mass; h = 1 + spike at x0
        let sys = system(vec![0, 0, 0], 1, vec![1.0, 1.0, 1.0]);
        let m = pullback_only(&sys);
        let delta = 0.3;
        let h = SampledFunction::real(sys.source().clone(), &[1.0 + delta, 1.0, 1.0]).unwrap();
        let r = closure_membership(&h, &m, sys.upstairs(), &[1.0, 0.5, 0.1]).unwrap();
        // best: m1 = 1 + delta/2, m2 = delta/2 everywhere, mass 3 delta / 2
        assert!((r.min_mass.unwrap() - 1.5 * delta).abs() < 1e-9);
        assert!(r.rungs[1].feasible && !r.rungs[2].feasible);
    }

    #[test]
    fn nesting_on_small_system() {
        let sys = system(vec![0, 0, 1, 2, 2], 3, vec![0.2, 0.3, 0.1, 0.25, 0.15]);
        let m = pullback_only(&sys);
        let h = SampledFunction::real(sys.source().clone(), &[0.1, -0.2, 0.3, 0.05, 0.0]).unwrap();
        let r = verify_nesting(&m, sys.upstairs(), &[(0.5, 1.0), (0.3, 0.4)], &[h]).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.checked >= 1);
        let z = SampledFunction::zero(sys.source().clone());
        let r = verify_nesting(&m, sys.upstairs(), &[(0.5, 1.0)], &[z]).unwrap();
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn dominating_examples() {
        let sys = system(vec![0, 0], 1, vec![1.0, 1.0]);
        let m = pullback_only(&sys);
        let f = SampledFunction::real(sys.source().clone(), &[1.0, -1.0]).unwrap();
        let n = find_dominating(&f, &m).unwrap();
        assert!((n.value(0).re - 1.0).abs() < 1e-12 && (n.value(1).re - 1.0).abs() < 1e-12);

        let sys = system(vec![0, 1], 2, vec![1.0, 1.0]);
        let alg = BaseAlgebra::constants(sys.target().clone());
        let g = SampledFunction::indicator(sys.source().clone(), &[0]).unwrap();
        let m = PullbackModule::new(sys.clone(), alg, vec![g], 1).unwrap();
        let h = SampledFunction::indicator(sys.source().clone(), &[1]).unwrap();
        match find_dominating(&h, &m) {
            Err(Error::Hypothesis { detail, .. }) => assert!(detail.contains("x1")),
            other => panic!("expected hypothesis error, got {other:?}"),
        }
        assert!(find_positive_at(1, &m).is_err());
        let p = find_positive_at(0, &m).unwrap();
        assert!((p.value(0).re - 1.0).abs() < 1e-12 && p.value(1).re.abs() < 1e-12);
    }

    #[test]
    fn positive_at_with_constants() {
        let sys = system(vec![0, 0, 0], 1, vec![1.0; 3]);
        let m = pullback_only(&sys);
        let p = find_positive_at(2, &m).unwrap();
        for v in p.real_parts() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sandwich_examples() {
        let sys = system(vec![0, 1, 2], 3, vec![1.0, 0.5, 0.0]);
        let f = SampledFunction::real(sys.source().clone(), &[1.0, 2.0, 3.0]).unwrap();
        let mu = sys.upstairs();
        let d = RiemannIntegrableDescriptor::new(f.clone(), vec![]).unwrap();
        let (c1, c2) = bourbaki_sandwich(&d, mu, 0.1).unwrap();
        assert_eq!(c1.real_parts(), f.real_parts());
        assert!(c2.real_parts().iter().all(|v| *v == 0.0));

        // one bad point of weight 0.5 and oscillation 2: mu(c2) = 0.5
        let d = RiemannIntegrableDescriptor::new(f.clone(), vec![1]).unwrap();
        assert!(bourbaki_sandwich(&d, mu, 0.4).is_err());
        let (c1, c2) = bourbaki_sandwich(&d, mu, 0.5).unwrap();
        assert_eq!(c1.value(1).re, 1.0);
        assert_eq!(c2.value(1).re, 1.0);

        // null bad point costs nothing
        let d = RiemannIntegrableDescriptor::new(f, vec![2]).unwrap();
        let (_, c2) = bourbaki_sandwich(&d, mu, 1e-12).unwrap();
        assert_eq!(c2.value(2).re, 1.5);
    }

    #[test]
    fn pipeline_on_six_point_system() {
        let sys = system(
            vec![0, 0, 1, 1, 2, 3],
            4,
            vec![0.3, 0.2, 0.1, 0.15, 0.05, 0.2],
        );
        let m = separating(&sys);
        let phi = SampledFunction::indicator(sys.source().clone(), &[2]).unwrap();
        let d = RiemannIntegrableDescriptor::new(phi.clone(), vec![]).unwrap();
        for eps in [1.0, 0.1, 0.01] {
            let cert = main_theorem_pipeline(&d, &m, eps, &PipelineOptions::default()).unwrap();
            let chk = check_certificate(&phi, &cert.m1, &cert.m2, sys.upstairs(), eps);
            assert!(chk.passed());
            let CertificateLedger::MainTheorem(l) = &cert.ledger else {
                panic!()
            };
            assert!(l.eps1 < eps / l.budget_coefficient);
            assert!(l.final_mass <= l.chain_coefficient * l.eps1 + 1e-12);
        }
    }

    #[test]
    fn pipeline_rejects_pullback_only_modules() {
        let sys = system(vec![0, 0, 1], 2, vec![1.0; 3]);
        let m = pullback_only(&sys);
        let phi = SampledFunction::indicator(sys.source().clone(), &[0]).unwrap();
        let d = RiemannIntegrableDescriptor::new(phi, vec![]).unwrap();
        match main_theorem_pipeline(&d, &m, 0.1, &PipelineOptions::default()) {
            Err(Error::Hypothesis { condition, .. }) => assert!(condition.contains("(2)")),
            other => panic!("expected fiber density failure, got {other:?}"),
        }
    }

    #[test]
    fn closure_module_examples() {
        let sys = system(vec![0, 0, 1, 1], 2, vec![0.25; 4]);
        let m = pullback_only(&sys);
        let one_y = SampledFunction::constant(sys.target().clone(), c64(1.0));
        let elem = m.basis()[0].clone();
        let cert = closure_module_mult(&one_y, &elem, &m, 0.1).unwrap();
        assert!(cert.check.mass < 1e-9);

        let ind = SampledFunction::indicator(sys.target().clone(), &[0]).unwrap();
        let cert = closure_module_mult(&ind, &elem, &m, 0.1).unwrap();
        assert!(cert.check.passed());

        // constants-only algebra: the multiplier residual is 1/2
        let alg = BaseAlgebra::constants(sys.target().clone());
        let one = SampledFunction::constant(sys.source().clone(), c64(1.0));
        let mc = PullbackModule::new(sys.clone(), alg, vec![one.clone()], 1).unwrap();
        let cert = closure_module_mult(&ind, &one, &mc, 1.0).unwrap();
        let CertificateLedger::ClosureModule(l) = &cert.ledger else {
            panic!()
        };
        assert!((l.delta_a - 0.5).abs() < 1e-9);
        assert!((cert.check.mass - 0.5).abs() < 1e-9);
        assert!(closure_module_mult(&ind, &one, &mc, 0.4).is_err());
    }

    #[test]
    fn double_closure_recombines() {
        let sys = system(vec![0, 0, 1, 2], 3, vec![0.3, 0.2, 0.4, 0.1]);
        let m = pullback_only(&sys);
        let h = SampledFunction::real(sys.source().clone(), &[1.0, 0.9, -0.5, 2.0]).unwrap();
        // a1 = (p*c) m with c an indicator, a2 = outer slack
        let ind = SampledFunction::indicator(sys.target().clone(), &[0]).unwrap();
        let a1 = pullback(sys.map(), &ind).unwrap().times(&h).unwrap();
        let resid = h.minus(&a1).unwrap().abs();
        let eps = 2.0 * (mass(&resid, sys.upstairs()) + 0.01) + 0.5;
        let cert = double_closure_certificate(&h, &a1, &resid, &m, eps).unwrap();
        assert!(cert.check.passed());
    }

    #[test]
    fn splice_with_empty_bad_set() {
        let sys = system(vec![0, 0, 1, 2], 3, vec![0.3, 0.2, 0.4, 0.1]);
        let m = separating(&sys);
        let phi = SampledFunction::indicator(sys.source().clone(), &[0]).unwrap();
        let d = RiemannIntegrableDescriptor::new(phi, vec![]).unwrap();
        let c = SampledFunction::indicator(sys.target().clone(), &[0]).unwrap();
        let h3 = SampledFunction::zero(sys.source().clone());
        let cert = density_theorem_splice(&d, &m, &c, &[], &h3, 0.1).unwrap();
        assert!(cert.check.passed());
    }

    #[test]
    fn splice_with_null_bad_point() {
        let sys = system(vec![0, 0, 1, 2], 3, vec![0.3, 0.0, 0.4, 0.3]);
        let m = separating(&sys);
        let phi = SampledFunction::real(sys.source().clone(), &[1.0, 0.5, 0.0, 0.0]).unwrap();
        let d = RiemannIntegrableDescriptor::with_ranges(phi, vec![1], vec![(0.0, 1.0)]).unwrap();
        let c = SampledFunction::indicator(sys.target().clone(), &[0]).unwrap();
        let h3 = SampledFunction::real(sys.source().clone(), &[0.0, 10.0, 0.0, 0.0]).unwrap();
        let cert = density_theorem_splice(&d, &m, &c, &[1], &h3, 0.05).unwrap();
        assert!(cert.check.passed());
        let CertificateLedger::Splice(l) = &cert.ledger else {
            panic!()
        };
        assert!(l.spliced_mass <= l.spliced_bound + 1e-12);

        let tiny = SampledFunction::real(sys.source().clone(), &[0.0, 1e-6, 0.0, 0.0]).unwrap();
        match density_theorem_splice(&d, &m, &c, &[1], &tiny, 0.05) {
            Err(Error::Hypothesis { detail, .. }) => assert!(detail.contains("x1")),
            other => panic!("expected domination failure, got {other:?}"),
        }
    }
}
