//! Two atoms in one fiber: pullback-only modules cannot isolate either atom.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::cheb_lp::STRICT_SLACK;
use crate::error::{Error, Result};
use crate::fibered_space::{FiberedMap, FiberedSystem, FiniteSpace, WeightedMeasure};
use crate::function_algebra::{BaseAlgebra, PullbackModule, SampledFunction};
use crate::tau_envelope::{closure_feasible_within, closure_pair};

/// Bisection stops once the bracket is this narrow.
pub const BISECTION_WIDTH: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct ObstructionFixture {
    pub system: Arc<FiberedSystem>,
    pub d1: f64,
    pub d2: f64,
    pub y0: usize,
    pub pi1: usize,
    pub pi2: usize,
    pub pullback_module: PullbackModule,
    pub separating_module: PullbackModule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModuleChoice {
    Pullback,
    Separating,
}

/// `X = {pi1, pi2, e1, ..}` over `Y = {y0, y1, ..}`, with the extra points
/// forming unit-mass singleton fibers.
pub fn build_fixture(d1: f64, d2: f64, extra_points: usize) -> Result<ObstructionFixture> {
    if !(d1 > 0.0 && d2 > 0.0 && d1.is_finite() && d2.is_finite()) {
        return Err(Error::Argument(format!(
            "atom masses must be positive, got ({d1}, {d2})"
        )));
    }
    let mut xs = vec!["pi1".to_string(), "pi2".to_string()];
    xs.extend((1..=extra_points).map(|i| format!("e{i}")));
    let ys: Vec<String> = (0..=extra_points).map(|i| format!("y{i}")).collect();
    let x = Arc::new(FiniteSpace::new(xs, None)?);
    let y = Arc::new(FiniteSpace::new(ys, None)?);
    let mut assignment = vec![0, 0];
    assignment.extend(1..=extra_points);
    let mut weights = vec![d1, d2];
    weights.extend(std::iter::repeat_n(1.0, extra_points));
    let map = FiberedMap::new(x.clone(), y.clone(), assignment)?;
    let system = Arc::new(FiberedSystem::new(
        map,
        WeightedMeasure::new(x.clone(), weights)?,
    )?);
    let algebra = BaseAlgebra::all_functions(y);
    let one = SampledFunction::constant(x.clone(), Complex64::new(1.0, 0.0));
    let pullback_module =
        PullbackModule::new(system.clone(), algebra.clone(), vec![one.clone()], 1)?;
    let sep = SampledFunction::indicator(x, &[0])?;
    let separating_module = PullbackModule::new(system.clone(), algebra, vec![one, sep], 1)?;
    Ok(ObstructionFixture {
        system,
        d1,
        d2,
        y0: 0,
        pi1: 0,
        pi2: 1,
        pullback_module,
        separating_module,
    })
}

impl ObstructionFixture {
    pub fn module(&self, choice: ModuleChoice) -> &PullbackModule {
        match choice {
            ModuleChoice::Pullback => &self.pullback_module,
            ModuleChoice::Separating => &self.separating_module,
        }
    }

    /// The indicator of `{pi1}`.
    pub fn phi(&self) -> SampledFunction {
        SampledFunction::indicator(self.system.source().clone(), &[self.pi1]).expect("pi1 exists")
    }

    /// The sufficient bound `d1 / 2`.
    pub fn sufficient_bound(&self) -> f64 {
        self.d1 / 2.0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub module: ModuleChoice,
    /// Bisected threshold below which no certificate exists.
    pub threshold: f64,
    /// Minimal closure mass from a single LP solve.
    pub lp_exact: f64,
    pub sufficient_bound: f64,
    pub bisection_steps: usize,
}

/// Bisects the smallest `eps` admitting a closure certificate for the
/// indicator of `{pi1}`.
pub fn infeasibility_threshold(
    fx: &ObstructionFixture,
    choice: ModuleChoice,
) -> Result<ThresholdReport> {
    let module = fx.module(choice);
    let mu = fx.system.upstairs();
    let phi = fx.phi();
    let feasible = |eps: f64| closure_feasible_within(&phi, module, mu, eps - STRICT_SLACK);
    let mut lo = 0.0;
    let mut hi = mu.total_mass() + 1.0;
    if !feasible(hi)? {
        return Err(Error::Solver(
            "no certificate even at the total mass".into(),
        ));
    }
    let mut steps = 0;
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
    }
    let lp_exact = closure_pair(&phi, module, mu)?
        .map(|p| p.2)
        .ok_or_else(|| Error::Solver("closure LP has no solution".into()))?;
    Ok(ThresholdReport {
        module: choice,
        threshold: hi,
        lp_exact,
        sufficient_bound: fx.sufficient_bound(),
        bisection_steps: steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<")]
    Lt,
}

impl Relation {
    fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Relation::Le => lhs <= rhs + tol,
            Relation::Ge => lhs + tol >= rhs,
            Relation::Lt => lhs < rhs,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Lt => "<",
        }
    }
}

/// One arithmetic assertion `lhs rel rhs`.
#[derive(Debug, Clone, Serialize)]
pub struct TraceStep {
    pub label: String,
    pub statement: String,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContradictionTrace {
    pub eps: f64,
    pub d1: f64,
    pub d2: f64,
    pub contradiction: bool,
    /// Values at `y0` of the best pair the LP can produce.
    pub g_y0: f64,
    pub h_y0: f64,
    pub steps: Vec<TraceStep>,
    pub sufficient_bound: f64,
    pub lp_exact: f64,
    pub message: String,
    pub witness_m1: Option<SampledFunction>,
    pub witness_m2: Option<SampledFunction>,
}

/// Tolerance used when replaying steps.
pub const TRACE_TOLERANCE: f64 = 1e-9;

fn step(label: &str, statement: String, lhs: f64, relation: Relation, rhs: f64) -> TraceStep {
    TraceStep {
        label: label.into(),
        statement,
        lhs,
        relation,
        rhs,
        holds: relation.holds(lhs, rhs, TRACE_TOLERANCE),
    }
}

/// Replays the two-atom argument on the pullback module at `eps`.
pub fn contradiction_replay(fx: &ObstructionFixture, eps: f64) -> Result<ContradictionTrace> {
    if !(eps > 0.0) {
        return Err(Error::Argument(format!("eps must be positive, got {eps}")));
    }
    let module = &fx.pullback_module;
    let mu = fx.system.upstairs();
    let phi = fx.phi();
    let (m1, m2, lp_exact) = closure_pair(&phi, module, mu)?
        .ok_or_else(|| Error::Solver("closure LP has no solution".into()))?;
    let (d1, d2) = (fx.d1, fx.d2);
    let g1 = m1.value(fx.pi1).re;
    let g2 = m1.value(fx.pi2).re;
    let h1 = m2.value(fx.pi1).re;
    let h2 = m2.value(fx.pi2).re;
    let mut trace = ContradictionTrace {
        eps,
        d1,
        d2,
        contradiction: false,
        g_y0: g1,
        h_y0: h1,
        steps: Vec::new(),
        sufficient_bound: fx.sufficient_bound(),
        lp_exact,
        message: String::new(),
        witness_m1: None,
        witness_m2: None,
    };
    if lp_exact <= eps - STRICT_SLACK {
        trace.message =
            format!("no contradiction at this eps: a certificate of mass {lp_exact} exists");
        trace.witness_m1 = Some(m1);
        trace.witness_m2 = Some(m2);
        return Ok(trace);
    }
    let s = &mut trace.steps;
    s.push(step(
        "pullback-g",
        "g o p takes one value on the fiber of y0".into(),
        (g1 - g2).abs(),
        Relation::Le,
        0.0,
    ));
    s.push(step(
        "pullback-h",
        "h o p takes one value on the fiber of y0".into(),
        (h1 - h2).abs(),
        Relation::Le,
        0.0,
    ));
    s.push(step(
        "at-pi1",
        format!("|1 - g(y0)| <= h(y0) with g(y0) = {g1}, h(y0) = {h1}"),
        (1.0 - g1).abs(),
        Relation::Le,
        h1,
    ));
    s.push(step(
        "at-pi2",
        format!("|g(y0)| <= h(y0) with g(y0) = {g2}"),
        g2.abs(),
        Relation::Le,
        h2,
    ));
    s.push(step(
        "triangle",
        "1 <= |1 - g(y0)| + |g(y0)|".into(),
        (1.0 - g1).abs() + g1.abs(),
        Relation::Ge,
        1.0,
    ));
    for g in [-1.0f64, 0.0, 0.25, 0.5, 1.0, 2.0] {
        s.push(step(
            "triangle-any-g",
            format!("1 <= |1 - g| + |g| at g = {g}"),
            (1.0 - g).abs() + g.abs(),
            Relation::Ge,
            1.0,
        ));
    }
    s.push(step("half", "h(y0) >= 1/2".into(), h1, Relation::Ge, 0.5));
    let mass = h1 * d1 + h2 * d2;
    s.push(step(
        "mass-lp",
        format!(
            "mu(h o p) >= h(y0) (d1 + d2) >= (d1 + d2)/2 = {}",
            (d1 + d2) / 2.0
        ),
        mass,
        Relation::Ge,
        (d1 + d2) / 2.0,
    ));
    s.push(step(
        "mass-sufficient",
        format!("(d1 + d2)/2 >= d1/2 = {}", d1 / 2.0),
        (d1 + d2) / 2.0,
        Relation::Ge,
        d1 / 2.0,
    ));
    s.push(step(
        "contradiction",
        format!("eps = {eps} < (d1 + d2)/2"),
        eps,
        Relation::Lt,
        (d1 + d2) / 2.0,
    ));
    trace.contradiction = trace.steps.iter().all(|s| s.holds);
    trace.message = if trace.contradiction {
        format!("no pair (g, h) has mu(h o p) < {eps}")
    } else {
        "a step of the chain failed".into()
    };
    Ok(trace)
}

/// Re-evaluates each step from its recorded numbers.
pub fn check_trace(trace: &ContradictionTrace) -> bool {
    trace
        .steps
        .iter()
        .all(|s| s.relation.holds(s.lhs, s.rhs, TRACE_TOLERANCE) == s.holds && s.holds)
        && trace.contradiction == !trace.steps.is_empty()
}

impl ContradictionTrace {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "two-atom fiber: d1 = {}, d2 = {}, eps = {}",
            self.d1, self.d2, self.eps
        );
        if self.steps.is_empty() {
            let _ = writeln!(out, "{}", self.message);
            return out;
        }
        for (i, s) in self.steps.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:>2}. [{}] {}: {} {} {} ({})",
                i + 1,
                s.label,
                s.statement,
                s.lhs,
                s.relation.symbol(),
                s.rhs,
                if s.holds { "ok" } else { "FAILS" }
            );
        }
        let _ = writeln!(
            out,
            "sufficient bound d1/2 = {}, LP-exact (d1 + d2)/2 = {}",
            self.sufficient_bound, self.lp_exact
        );
        let _ = writeln!(out, "{}", self.message);
        out
    }
}
