//! Transfer of measure convergence from a module to envelope-approximable
//! functions, and the case-by-case estimate checker of the construction
//! argument.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fibered_space::{ensure_same, FiberedSystem, WeightedMeasure};
use crate::function_algebra::{integrate, pullback, PullbackModule, SampledFunction};
use crate::tau_envelope::EnvelopeCertificate;

/// Default horizon of a sequence check.
pub const DEFAULT_HORIZON: usize = 200;
/// Tolerance of the per-n triangle inequality.
pub const TRIANGLE_TOLERANCE: f64 = 1e-12;
/// A deviation decaying at least like `n^DECAY_EXPONENT` counts as convergent.
pub const DECAY_EXPONENT: f64 = -0.5;

/// How the terms `mu_n` are produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SequenceRule {
    /// `mu_n = mu + nu / n`.
    Perturbation { nu: Vec<f64> },
    /// `mu_n = mu + (1 + (-1)^n) / 2 * nu`: the perturbation switches on at
    /// even `n` and never decays.
    Alternating { nu: Vec<f64> },
    /// `mu_n` listed explicitly for `n = 1..`.
    Explicit { terms: Vec<Vec<f64>> },
}

#[derive(Debug, Clone)]
pub struct MeasureSequence {
    pub base: WeightedMeasure,
    pub rule: SequenceRule,
}

impl MeasureSequence {
    pub fn new(base: WeightedMeasure, rule: SequenceRule) -> Result<Self> {
        let n = base.space().len();
        let ok = match &rule {
            SequenceRule::Perturbation { nu } | SequenceRule::Alternating { nu } => {
                nu.len() == n && nu.iter().all(|w| *w >= 0.0 && w.is_finite())
            }
            SequenceRule::Explicit { terms } => terms
                .iter()
                .all(|t| t.len() == n && t.iter().all(|w| *w >= 0.0 && w.is_finite())),
        };
        if !ok {
            return Err(Error::Config(
                "sequence terms must be nonnegative measures on the base space".into(),
            ));
        }
        Ok(Self { base, rule })
    }

    /// Number of available terms; `None` when unbounded.
    pub fn n_max(&self) -> Option<usize> {
        match &self.rule {
            SequenceRule::Explicit { terms } => Some(terms.len()),
            _ => None,
        }
    }

    /// The term `mu_n`, `n >= 1`.
    pub fn term(&self, n: usize) -> Result<WeightedMeasure> {
        if n == 0 || self.n_max().is_some_and(|m| n > m) {
            return Err(Error::Argument(format!("term {n} is out of range")));
        }
        let base = self.base.weights();
        let w: Vec<f64> = match &self.rule {
            SequenceRule::Perturbation { nu } => {
                base.iter().zip(nu).map(|(b, v)| b + v / n as f64).collect()
            }
            SequenceRule::Alternating { nu } => {
                let on = if n.is_multiple_of(2) { 1.0 } else { 0.0 };
                base.iter().zip(nu).map(|(b, v)| b + on * v).collect()
            }
            SequenceRule::Explicit { terms } => terms[n - 1].clone(),
        };
        WeightedMeasure::unchecked(self.base.space().clone(), w)
    }
}

fn check_horizon(seq: &MeasureSequence, n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Argument("horizon must be at least 2".into()));
    }
    if let Some(m) = seq.n_max() {
        if n > m {
            return Err(Error::Argument(format!(
                "horizon {n} exceeds the {m} available terms"
            )));
        }
    }
    Ok(())
}

/// Tail window `[N/2, N]`.
pub fn tail_window(n: usize) -> (usize, usize) {
    ((n / 2).max(1), n)
}

fn loglog_slope(points: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, d)| *d > 0.0)
        .map(|&(n, d)| ((n as f64).ln(), d.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Convergence along one basis direction.
#[derive(Debug, Clone, Serialize)]
pub struct DirectionReport {
    pub index: usize,
    pub tail_max: f64,
    /// Fitted exponent of the deviation over the tail, when it is nonzero.
    pub decay_exponent: Option<f64>,
    pub convergent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModuleConvergenceReport {
    pub horizon: usize,
    pub tail_window: (usize, usize),
    pub tolerance: f64,
    /// `deviations[n - 1][b] = |mu_n(b) - mu(b)|`.
    pub deviations: Vec<Vec<f64>>,
    pub directions: Vec<DirectionReport>,
    pub non_convergent: Vec<usize>,
    pub converges: bool,
}

/// A direction converges when its tail deviation is within `tolerance` or
/// decays at least like `n^-1/2` over the tail.
pub fn check_convergence_on_module(
    seq: &MeasureSequence,
    module: &PullbackModule,
    tolerance: f64,
    horizon: usize,
) -> Result<ModuleConvergenceReport> {
    check_horizon(seq, horizon)?;
    ensure_same(
        seq.base.space(),
        module.system().source(),
        "sequence not on the module source",
    )?;
    let basis = module.basis();
    let limits: Vec<Complex64> = basis
        .iter()
        .map(|b| integrate(b, &seq.base))
        .collect::<Result<_>>()?;
    let mut deviations = Vec::with_capacity(horizon);
    for n in 1..=horizon {
        let mu_n = seq.term(n)?;
        let row = basis
            .iter()
            .zip(&limits)
            .map(|(b, l)| Ok((integrate(b, &mu_n)? - l).norm()))
            .collect::<Result<Vec<f64>>>()?;
        deviations.push(row);
    }
    let (lo, hi) = tail_window(horizon);
    let directions: Vec<DirectionReport> = (0..basis.len())
        .map(|j| {
            let tail: Vec<(usize, f64)> = (lo..=hi).map(|n| (n, deviations[n - 1][j])).collect();
            let tail_max = tail.iter().map(|t| t.1).fold(0.0, f64::max);
            let decay_exponent = loglog_slope(&tail);
            let convergent =
                tail_max <= tolerance || decay_exponent.is_some_and(|s| s <= DECAY_EXPONENT);
            DirectionReport {
                index: j,
                tail_max,
                decay_exponent,
                convergent,
            }
        })
        .collect();
    let non_convergent: Vec<usize> = directions
        .iter()
        .filter(|d| !d.convergent)
        .map(|d| d.index)
        .collect();
    Ok(ModuleConvergenceReport {
        horizon,
        tail_window: (lo, hi),
        tolerance,
        deviations,
        converges: non_convergent.is_empty(),
        non_convergent,
        directions,
    })
}

/// One row of the transfer chain.
#[derive(Debug, Clone, Serialize)]
pub struct TransferRow {
    pub n: usize,
    pub deviation: f64,
    pub h2_n: f64,
    pub h2_limit: f64,
    pub h1_deviation: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransferReport {
    pub eps: f64,
    pub horizon: usize,
    pub tail_window: (usize, usize),
    pub hypothesis: ModuleConvergenceReport,
    /// False when the module gate fails; nothing else is then claimed.
    pub hypothesis_holds: bool,
    pub rows: Vec<TransferRow>,
    pub triangle_holds: bool,
    pub tail_max_deviation: Option<f64>,
    pub limit_bound: Option<f64>,
    pub tail_bound_holds: Option<bool>,
    pub transfer_claimed: bool,
}

/// Checks `|mu_n(phi) - mu(phi)| <= mu_n(h2) + mu(h2) + |mu_n(h1) - mu(h1)|`
/// for every `n <= N` and the tail bound `2 eps`, given an envelope
/// certificate `|phi - h1| <= h2`.
pub fn transfer_convergence(
    seq: &MeasureSequence,
    phi: &SampledFunction,
    module: &PullbackModule,
    certificate: Option<&EnvelopeCertificate>,
    eps: f64,
    horizon: usize,
    tolerance: f64,
) -> Result<TransferReport> {
    let cert = certificate.ok_or_else(|| {
        Error::Precondition(
            "no envelope certificate for phi: run the pipeline scenario first".into(),
        )
    })?;
    ensure_same(
        phi.space(),
        seq.base.space(),
        "phi not on the sequence space",
    )?;
    let hypothesis = check_convergence_on_module(seq, module, tolerance, horizon)?;
    let (lo, hi) = tail_window(horizon);
    let mut report = TransferReport {
        eps,
        horizon,
        tail_window: (lo, hi),
        hypothesis_holds: hypothesis.converges,
        hypothesis,
        rows: Vec::new(),
        triangle_holds: false,
        tail_max_deviation: None,
        limit_bound: None,
        tail_bound_holds: None,
        transfer_claimed: false,
    };
    if !report.hypothesis_holds {
        return Ok(report);
    }
    let (h1, h2) = (&cert.m1, &cert.m2);
    let phi_lim = integrate(phi, &seq.base)?;
    let h1_lim = integrate(h1, &seq.base)?;
    let h2_lim = integrate(h2, &seq.base)?.re;
    for n in 1..=horizon {
        let mu_n = seq.term(n)?;
        let deviation = (integrate(phi, &mu_n)? - phi_lim).norm();
        let h2_n = integrate(h2, &mu_n)?.re;
        let h1_deviation = (integrate(h1, &mu_n)? - h1_lim).norm();
        let bound = h2_n + h2_lim + h1_deviation;
        report.rows.push(TransferRow {
            n,
            deviation,
            h2_n,
            h2_limit: h2_lim,
            h1_deviation,
            bound,
            holds: deviation <= bound + TRIANGLE_TOLERANCE,
        });
    }
    report.triangle_holds = report.rows.iter().all(|r| r.holds);
    let tail_max = report.rows[lo - 1..hi]
        .iter()
        .map(|r| r.deviation)
        .fold(0.0, f64::max);
    report.tail_max_deviation = Some(tail_max);
    report.limit_bound = Some(2.0 * h2_lim);
    let ok = tail_max <= 2.0 * eps + tolerance;
    report.tail_bound_holds = Some(ok);
    report.transfer_claimed = report.triangle_holds && ok;
    Ok(report)
}

/// Inputs of the case-by-case estimate. Regions are subsets of the target;
/// `hat_h[i]` and `hat_h2` live on the source, `a[i]` on the target.
#[derive(Debug, Clone)]
pub struct BadSetEstimateFixture {
    pub system: Arc<FiberedSystem>,
    pub bad: Vec<bool>,
    pub hat_h: Vec<SampledFunction>,
    pub a: Vec<SampledFunction>,
    pub hat_h2: SampledFunction,
    pub w: Vec<Vec<usize>>,
    pub w_prime: Vec<Vec<usize>>,
    pub c1: Vec<usize>,
    pub band: Vec<usize>,
    pub c_g: f64,
    pub c_prime_g: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub m_eps1: f64,
    pub n_eps1: usize,
    pub eps: f64,
}

const BOUND_SLACK: f64 = 1e-12;

fn member(n: usize, set: &[usize]) -> Vec<bool> {
    let mut v = vec![false; n];
    for &i in set {
        v[i] = true;
    }
    v
}

impl BadSetEstimateFixture {
    /// Checks the listed pointwise bounds of the inputs; the estimate checker
    /// assumes these.
    pub fn validate(&self) -> Result<()> {
        let sys = &self.system;
        let (nx, ny) = (sys.source().len(), sys.target().len());
        let regions = self.hat_h.len();
        if self.a.len() != regions || self.w.len() != regions || self.w_prime.len() != regions {
            return Err(Error::Config("one a, W and W' per function hat_h".into()));
        }
        if self.bad.len() != nx {
            return Err(Error::Config("bad flags must cover the source".into()));
        }
        for f in self.hat_h.iter().chain([&self.hat_h2]) {
            ensure_same(f.space(), sys.source(), "hat functions live on the source")?;
            if !f.is_real() {
                return Err(Error::Config("hat functions must be real".into()));
            }
        }
        for f in &self.a {
            ensure_same(f.space(), sys.target(), "a_i lives on the target")?;
            if !f.is_real() {
                return Err(Error::Config("a_i must be real".into()));
            }
        }
        let all_sets = self
            .w
            .iter()
            .chain(&self.w_prime)
            .chain([&self.c1, &self.band]);
        if all_sets.flatten().any(|&y| y >= ny) {
            return Err(Error::Config("region index out of range".into()));
        }
        let in_c1 = member(ny, &self.c1);
        let in_b = member(ny, &self.band);
        let fail = |what: String| Err(Error::Config(format!("fixture bound violated: {what}")));
        if self.c1.iter().any(|&y| !in_b[y]) {
            return fail("C1 must lie in B".into());
        }
        let map = sys.map();
        for i in 0..regions {
            let in_w = member(ny, &self.w[i]);
            let in_wp = member(ny, &self.w_prime[i]);
            if self.w[i].iter().any(|&y| !in_wp[y]) || self.w_prime[i].iter().any(|&y| !in_c1[y]) {
                return fail(format!("need W_{i} in W'_{i} in C1"));
            }
            for x in 0..nx {
                if !in_wp[map.image_of(x)] {
                    continue;
                }
                let h = self.hat_h[i].value(x).re;
                let ok = if self.bad[x] {
                    (1.0..=self.c_g).contains(&h)
                } else {
                    (0.0..=self.eps1).contains(&h)
                };
                if !ok {
                    return fail(format!("hat_h_{i} band at {}", sys.source().id(x)));
                }
            }
            for y in 0..ny {
                let v = self.a[i].value(y).re;
                if in_b[y] && !(0.0..=1.0 + self.eps3).contains(&v) {
                    return fail(format!(
                        "0 <= a_{i} <= 1 + eps3 on B at {}",
                        sys.target().id(y)
                    ));
                }
                if in_w[y] && v < 1.0 {
                    return fail(format!("a_{i} >= 1 on W_{i} at {}", sys.target().id(y)));
                }
                if in_b[y] && !in_wp[y] && v > self.eps3 {
                    return fail(format!(
                        "a_{i} <= eps3 off W'_{i} at {}",
                        sys.target().id(y)
                    ));
                }
            }
        }
        for x in 0..nx {
            let v = self.hat_h2.value(x).re;
            if v < 0.0 || (in_c1[map.image_of(x)] && v < 1.0) {
                return fail(format!(
                    "hat_h2 >= 1 on C1 and >= 0 at {}",
                    sys.source().id(x)
                ));
            }
        }
        let annulus = self.annulus_preimage();
        let mass = sys.upstairs().mass_of(&annulus);
        if mass > self.eps2 {
            return fail(format!("annulus mass {mass} exceeds eps2 {}", self.eps2));
        }
        Ok(())
    }

    fn covered(&self) -> Vec<bool> {
        let ny = self.system.target().len();
        let mut v = vec![false; ny];
        for wi in &self.w {
            for &y in wi {
                v[y] = true;
            }
        }
        v
    }

    fn annulus(&self) -> Vec<bool> {
        let ny = self.system.target().len();
        let mut v = vec![false; ny];
        for (wi, wpi) in self.w.iter().zip(&self.w_prime) {
            let in_w = member(ny, wi);
            for &y in wpi {
                if !in_w[y] {
                    v[y] = true;
                }
            }
        }
        v
    }

    fn annulus_preimage(&self) -> Vec<usize> {
        let ann = self.annulus();
        let map = self.system.map();
        (0..self.system.source().len())
            .filter(|&x| ann[map.image_of(x)])
            .collect()
    }
}

/// A point where a majorization fails.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateViolation {
    pub set: String,
    pub point: String,
    pub value: f64,
    pub bound: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SetCheck {
    pub set: String,
    pub points: usize,
    pub worst_margin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BadSetReport {
    pub checks: Vec<SetCheck>,
    pub violations: Vec<EstimateViolation>,
    pub final_mass: f64,
    pub final_bound: f64,
    pub passed: bool,
}

impl BadSetReport {
    /// Name of the first failing set.
    pub fn first_failure(&self) -> Option<&str> {
        self.checks
            .iter()
            .find(|c| !c.holds)
            .map(|c| c.set.as_str())
    }
}

pub const SET_GOOD_COVERED: &str = "good-covered";
pub const SET_BAD_COVERED: &str = "bad-covered";
pub const SET_ANNULUS: &str = "annulus";
pub const SET_ELSEWHERE: &str = "elsewhere";
pub const SET_NONNEGATIVE: &str = "nonnegative-on-C1";
pub const SET_AT_LEAST_ONE: &str = "at-least-one-on-bad-C1";
pub const SET_FINAL_MASS: &str = "final-mass";

/// Forms `h1 = sum_i (p*a_i) hat_h_i` and checks each displayed bound on its
/// set, then `h' = h1 + eps3 M N hat_h2` and the final mass.
pub fn verify_bad_set_estimates(fx: &BadSetEstimateFixture) -> Result<BadSetReport> {
    fx.validate()?;
    let sys = &fx.system;
    let map = sys.map();
    let src = sys.source();
    let nx = src.len();
    let mut h1 = vec![0.0; nx];
    let mut abs_sum = vec![0.0; nx];
    for (a, h) in fx.a.iter().zip(&fx.hat_h) {
        let pa = pullback(map, a)?;
        for x in 0..nx {
            h1[x] += pa.value(x).re * h.value(x).re;
            abs_sum[x] += h.value(x).re.abs();
        }
    }
    let covered = fx.covered();
    let annulus = fx.annulus();
    let in_c1 = member(sys.target().len(), &fx.c1);
    let e3 = fx.eps3;
    let mn = fx.m_eps1 * fx.n_eps1 as f64;
    let one_c1 = |x: usize| if in_c1[map.image_of(x)] { 1.0 } else { 0.0 };

    type Case<'a> = (
        &'static str,
        Box<dyn Fn(usize) -> bool + 'a>,
        Box<dyn Fn(usize) -> (f64, f64) + 'a>,
    );
    let cases: Vec<Case> = vec![
        (
            SET_GOOD_COVERED,
            Box::new(|x| covered[map.image_of(x)] && !fx.bad[x]),
            Box::new(|x| (h1[x].abs(), (1.0 + e3) * fx.eps1 * fx.c_prime_g * one_c1(x))),
        ),
        (
            SET_BAD_COVERED,
            Box::new(|x| covered[map.image_of(x)] && fx.bad[x]),
            Box::new(|x| (h1[x].abs(), (1.0 + e3) * fx.c_g * fx.c_prime_g * one_c1(x))),
        ),
        (
            SET_ANNULUS,
            Box::new(|x| annulus[map.image_of(x)]),
            Box::new(|x| (h1[x].abs(), (1.0 + e3) * mn)),
        ),
        (
            SET_ELSEWHERE,
            Box::new(|x| !covered[map.image_of(x)] && !annulus[map.image_of(x)]),
            Box::new(|x| (h1[x].abs(), e3 * abs_sum[x])),
        ),
    ];
    let h_prime: Vec<f64> = (0..nx)
        .map(|x| h1[x] + e3 * mn * fx.hat_h2.value(x).re)
        .collect();
    let lower_cases: Vec<Case> = vec![
        (
            SET_NONNEGATIVE,
            Box::new(|x| in_c1[map.image_of(x)]),
            Box::new(|x| (h_prime[x], 0.0)),
        ),
        (
            SET_AT_LEAST_ONE,
            Box::new(|x| in_c1[map.image_of(x)] && fx.bad[x]),
            Box::new(|x| (h_prime[x], 1.0)),
        ),
    ];
    let mut checks = Vec::new();
    let mut violations = Vec::new();
    let mut run = |cases: &[Case], upper: bool| {
        for (name, pred, eval) in cases {
            let mut points = 0;
            let mut worst = f64::INFINITY;
            for x in (0..nx).filter(|&x| pred(x)) {
                points += 1;
                let (value, bound) = eval(x);
                let margin = if upper { bound - value } else { value - bound };
                worst = worst.min(margin);
                if margin < -BOUND_SLACK {
                    violations.push(EstimateViolation {
                        set: name.to_string(),
                        point: src.id(x).to_string(),
                        value,
                        bound,
                        margin,
                    });
                }
            }
            checks.push(SetCheck {
                set: name.to_string(),
                points,
                worst_margin: worst,
                holds: worst >= -BOUND_SLACK,
            });
        }
    };
    run(&cases, true);
    run(&lower_cases, false);
    let final_mass = sys.upstairs().integrate_real(&h_prime);
    let final_bound = fx.eps / 2.0;
    let mass_ok = final_mass < final_bound;
    checks.push(SetCheck {
        set: SET_FINAL_MASS.into(),
        points: nx,
        worst_margin: final_bound - final_mass,
        holds: mass_ok,
    });
    if !mass_ok {
        violations.push(EstimateViolation {
            set: SET_FINAL_MASS.into(),
            point: "*".into(),
            value: final_mass,
            bound: final_bound,
            margin: final_bound - final_mass,
        });
    }
    let passed = checks.iter().all(|c| c.holds);
    Ok(BadSetReport {
        checks,
        violations,
        final_mass,
        final_bound,
        passed,
    })
}

/// The mass bound the four cases add up to, before the `eps / 2` comparison.
pub fn estimated_mass(fx: &BadSetEstimateFixture) -> f64 {
    let sys = &fx.system;
    let map = sys.map();
    let mu = sys.upstairs();
    let in_c1 = member(sys.target().len(), &fx.c1);
    let (e1, e3) = (fx.eps1, fx.eps3);
    let mn = fx.m_eps1 * fx.n_eps1 as f64;
    let c1_x: Vec<usize> = (0..sys.source().len())
        .filter(|&x| in_c1[map.image_of(x)])
        .collect();
    let bad_c1: Vec<usize> = c1_x.iter().copied().filter(|&x| fx.bad[x]).collect();
    let h2_mass = mu.integrate_real(&fx.hat_h2.real_parts());
    let abs_mass: f64 = fx
        .hat_h
        .iter()
        .map(|h| mu.integrate_real(&h.moduli()))
        .sum();
    (1.0 + e3) * e1 * fx.c_prime_g * mu.mass_of(&c1_x)
        + (1.0 + e3) * fx.c_g * fx.c_prime_g * mu.mass_of(&bad_c1)
        + (1.0 + e3) * mn * fx.eps2
        + e3 * abs_mass
        + e3 * mn * h2_mass
}
