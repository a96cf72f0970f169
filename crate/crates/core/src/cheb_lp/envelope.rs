use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::simplex::{LinearProgram, LpOutcome, Sense, VarKind};
use crate::error::{Error, Result};
use crate::fibered_space::{ensure_same, WeightedMeasure};
use crate::function_algebra::SampledFunction;
use crate::linalg::{self, CVec};

/// Slack realizing the strict inequality `mu(m) < eps`.
pub const STRICT_SLACK: f64 = 1e-9;
const RANK_CUTOFF: f64 = 1e-10;
const CLOSURE_FACETS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Feasible,
    Infeasible,
}

/// Outcome of the U_eps membership test for `h`.
#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityCertificate {
    pub status: Status,
    /// Coefficients of the dominator over the real span basis.
    pub witness: Option<Vec<f64>>,
    /// Pointwise values of the dominator.
    pub witness_values: Option<Vec<f64>>,
    pub achieved_mass: Option<f64>,
    /// Smallest mass of any dominator, when one exists.
    pub min_mass: Option<f64>,
    /// Lower bound on that minimum from the LP dual.
    pub dual_bound: Option<f64>,
    /// Point where no dominator can reach `|h|`, when none exists at all.
    pub separating_point: Option<String>,
}

impl FeasibilityCertificate {
    pub fn is_feasible(&self) -> bool {
        self.status == Status::Feasible
    }
}

/// Orthonormal basis of the real functions `Re b`, `Im b` for `b` in the
/// given list.
pub fn real_span(basis: &[SampledFunction]) -> Vec<Vec<f64>> {
    let cols: Vec<CVec> = basis
        .iter()
        .flat_map(|b| {
            [
                b.real_parts()
                    .into_iter()
                    .map(|r| Complex64::new(r, 0.0))
                    .collect(),
                b.imag_parts()
                    .into_iter()
                    .map(|r| Complex64::new(r, 0.0))
                    .collect(),
            ]
        })
        .collect();
    linalg::orthonormalize(&cols, RANK_CUTOFF)
        .q
        .into_iter()
        .map(|v| v.into_iter().map(|z| z.re).collect())
        .collect()
}

pub(crate) enum Dominator {
    Found {
        coeffs: Vec<f64>,
        values: Vec<f64>,
        mass: f64,
        dual_bound: f64,
    },
    Separated {
        point: usize,
    },
}

fn combine(span: &[Vec<f64>], c: &[f64], n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for (col, ck) in span.iter().zip(c) {
        for (vk, bk) in v.iter_mut().zip(col) {
            *vk += ck * bk;
        }
    }
    v
}

/// `min mu(m)` over `m` in the real span with `m >= g` pointwise.
pub(crate) fn min_dominator(g: &[f64], span: &[Vec<f64>], weights: &[f64]) -> Result<Dominator> {
    let n = g.len();
    let k = span.len();
    let obj: Vec<f64> = span
        .iter()
        .map(|col| col.iter().zip(weights).map(|(b, w)| b * w).sum())
        .collect();
    let mut lp = LinearProgram::new(vec![VarKind::Free; k], obj);
    let mut rows = Vec::new();
    for x in 0..n {
        let coeffs: Vec<f64> = span.iter().map(|col| col[x]).collect();
        if g[x] == 0.0 && coeffs.iter().all(|c| *c == 0.0) {
            continue;
        }
        if coeffs.iter().all(|c| *c == 0.0) {
            return Ok(Dominator::Separated { point: x });
        }
        lp.push(coeffs, Sense::Ge, g[x]);
        rows.push(x);
    }
    match lp.solve()? {
        LpOutcome::Optimal(s) => {
            let values = combine(span, &s.x, n);
            let mass = values.iter().zip(weights).map(|(v, w)| v * w).sum();
            let dual_bound = rows.iter().zip(&s.duals).map(|(&x, y)| g[x] * y).sum();
            Ok(Dominator::Found {
                coeffs: s.x,
                values,
                mass,
                dual_bound,
            })
        }
        LpOutcome::Infeasible(f) => {
            let (i, _) = f
                .multipliers
                .iter()
                .enumerate()
                .fold((0, f64::MIN), |b, (i, &u)| if u > b.1 { (i, u) } else { b });
            Ok(Dominator::Separated { point: rows[i] })
        }
        LpOutcome::Unbounded => Err(Error::Solver(
            "dominator mass unbounded below; the measure charges a negative direction".into(),
        )),
    }
}

/// Decides `|h| <= m`, `mu(m) <= eps - STRICT_SLACK` for some `m` in the real
/// span of the module basis.
pub fn envelope_feasible(
    h: &SampledFunction,
    module_basis: &[SampledFunction],
    mu: &WeightedMeasure,
    eps: f64,
) -> Result<FeasibilityCertificate> {
    if !(eps > 0.0) {
        return Err(Error::Argument(format!("eps must be positive, got {eps}")));
    }
    ensure_same(
        h.space(),
        mu.space(),
        "function and measure on different spaces",
    )?;
    for b in module_basis {
        ensure_same(b.space(), h.space(), "module basis on a different space")?;
    }
    let span = real_span(module_basis);
    envelope_feasible_span(h, &span, mu, eps)
}

pub(crate) fn envelope_feasible_span(
    h: &SampledFunction,
    span: &[Vec<f64>],
    mu: &WeightedMeasure,
    eps: f64,
) -> Result<FeasibilityCertificate> {
    let g = h.moduli();
    if g.iter().all(|v| *v == 0.0) {
        return Ok(FeasibilityCertificate {
            status: Status::Feasible,
            witness: Some(vec![0.0; span.len()]),
            witness_values: Some(vec![0.0; g.len()]),
            achieved_mass: Some(0.0),
            min_mass: Some(0.0),
            dual_bound: Some(0.0),
            separating_point: None,
        });
    }
    match min_dominator(&g, span, mu.weights())? {
        Dominator::Found {
            coeffs,
            values,
            mass,
            dual_bound,
        } => {
            let feasible = mass <= eps - STRICT_SLACK;
            Ok(FeasibilityCertificate {
                status: if feasible {
                    Status::Feasible
                } else {
                    Status::Infeasible
                },
                witness: feasible.then_some(coeffs),
                witness_values: feasible.then_some(values),
                achieved_mass: feasible.then_some(mass),
                min_mass: Some(mass),
                dual_bound: Some(dual_bound),
                separating_point: None,
            })
        }
        Dominator::Separated { point } => Ok(FeasibilityCertificate {
            status: Status::Infeasible,
            witness: None,
            witness_values: None,
            achieved_mass: None,
            min_mass: None,
            dual_bound: None,
            separating_point: Some(h.space().id(point).to_string()),
        }),
    }
}

/// Optimal pair for the closure LP `|h - m1| <= m2`, `min mu(m2)`.
#[derive(Debug, Clone)]
pub(crate) struct ClosurePair {
    pub m1: CVec,
    pub m2: Vec<f64>,
    pub mass: f64,
}

/// Layout of the closure LP: the approximant `m1` ranges over the real span
/// when `h` is real and the module is closed under conjugation, otherwise
/// over complex combinations of the module basis with the modulus replaced
/// by conservative facets.
pub(crate) struct ClosureLp<'a> {
    h: &'a [Complex64],
    basis: &'a [CVec],
    span: &'a [Vec<f64>],
    weights: &'a [f64],
    real: bool,
    active: Option<Vec<bool>>,
}

impl<'a> ClosureLp<'a> {
    pub fn new(
        h: &'a [Complex64],
        basis: &'a [CVec],
        span: &'a [Vec<f64>],
        weights: &'a [f64],
    ) -> Self {
        let conj_closed = span.len() == basis.len();
        let real = conj_closed && h.iter().all(|z| z.im == 0.0);
        Self {
            h,
            basis,
            span,
            weights,
            real,
            active: None,
        }
    }

    /// Imposes domination only on the marked points and `m2 >= 0` on the
    /// rest.
    pub fn restricted_to(mut self, active: Vec<bool>) -> Self {
        self.active = Some(active);
        self
    }

    fn m1_vars(&self) -> usize {
        if self.real {
            self.span.len()
        } else {
            2 * self.basis.len()
        }
    }

    fn mass_row(&self) -> Vec<f64> {
        let mut row = vec![0.0; self.m1_vars()];
        row.extend(self.span.iter().map(|col| {
            col.iter()
                .zip(self.weights)
                .map(|(b, w)| b * w)
                .sum::<f64>()
        }));
        row
    }

    fn build(&self, objective: bool) -> LinearProgram {
        let k1 = self.m1_vars();
        let k2 = self.span.len();
        let obj = if objective {
            self.mass_row()
        } else {
            vec![0.0; k1 + k2]
        };
        let mut lp = LinearProgram::new(vec![VarKind::Free; k1 + k2], obj);
        let n = self.h.len();
        let cosf = (PI / CLOSURE_FACETS as f64).cos();
        for x in 0..n {
            let m2row: Vec<f64> = self.span.iter().map(|c| c[x]).collect();
            let trivial = self.h[x] == Complex64::new(0.0, 0.0)
                && m2row.iter().all(|v| *v == 0.0)
                && self.basis.iter().all(|c| c[x] == Complex64::new(0.0, 0.0));
            if trivial {
                continue;
            }
            if self.active.as_ref().is_some_and(|a| !a[x]) {
                if m2row.iter().any(|v| *v != 0.0) {
                    let mut row = vec![0.0; k1];
                    row.extend(&m2row);
                    lp.push(row, Sense::Ge, 0.0);
                }
                continue;
            }
            if self.real {
                let m1row: Vec<f64> = self.span.iter().map(|c| c[x]).collect();
                // m2 + m1 >= h and m2 - m1 >= -h
                let mut up = m1row.clone();
                up.extend(&m2row);
                lp.push(up, Sense::Ge, self.h[x].re);
                let mut dn: Vec<f64> = m1row.iter().map(|v| -v).collect();
                dn.extend(&m2row);
                lp.push(dn, Sense::Ge, -self.h[x].re);
            } else {
                for l in 0..CLOSURE_FACETS {
                    let rot =
                        Complex64::from_polar(1.0, -2.0 * PI * l as f64 / CLOSURE_FACETS as f64);
                    // cos * m2 + Re(rot m1) >= Re(rot h)
                    let mut row = Vec::with_capacity(k1 + k2);
                    row.extend(self.basis.iter().map(|c| (rot * c[x]).re));
                    row.extend(self.basis.iter().map(|c| -(rot * c[x]).im));
                    row.extend(m2row.iter().map(|v| cosf * v));
                    lp.push(row, Sense::Ge, (rot * self.h[x]).re);
                }
            }
        }
        lp
    }

    fn pair(&self, x: &[f64]) -> ClosurePair {
        let n = self.h.len();
        let k1 = self.m1_vars();
        let m1: CVec = if self.real {
            combine(self.span, &x[..k1], n)
                .into_iter()
                .map(|v| Complex64::new(v, 0.0))
                .collect()
        } else {
            let k = self.basis.len();
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            for (j, col) in self.basis.iter().enumerate() {
                let c = Complex64::new(x[j], x[k + j]);
                for (vk, bk) in v.iter_mut().zip(col) {
                    *vk += c * bk;
                }
            }
            v
        };
        let m2 = combine(self.span, &x[k1..], n);
        let mass = m2.iter().zip(self.weights).map(|(v, w)| v * w).sum();
        ClosurePair { m1, m2, mass }
    }

    /// The mass-minimal pair, or `None` when `m2` can never dominate.
    pub fn minimize(&self) -> Result<Option<ClosurePair>> {
        match self.build(true).solve()? {
            LpOutcome::Optimal(s) => Ok(Some(self.pair(&s.x))),
            LpOutcome::Infeasible(_) => Ok(None),
            LpOutcome::Unbounded => Err(Error::Solver("closure mass unbounded below".into())),
        }
    }

    /// Phase-one feasibility of the closure system with `mu(m2) <= budget`.
    pub fn feasible_within(&self, budget: f64) -> Result<Option<ClosurePair>> {
        let mut lp = self.build(false);
        lp.push(self.mass_row(), Sense::Le, budget);
        match lp.solve()? {
            LpOutcome::Optimal(s) => Ok(Some(self.pair(&s.x))),
            LpOutcome::Infeasible(_) => Ok(None),
            LpOutcome::Unbounded => Err(Error::Solver("feasibility program unbounded".into())),
        }
    }
}
