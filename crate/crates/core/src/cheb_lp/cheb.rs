use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::simplex::{LinearProgram, LpOutcome, Sense, VarKind};
use crate::error::{Error, Result};
use crate::fibered_space::ensure_same;
use crate::function_algebra::SampledFunction;
use crate::linalg::{self, CVec};

pub const FACETS: usize = 16;
const MAX_REFINEMENTS: usize = 100;
const GAP_TOL: f64 = 1e-7;
const ACTIVE_TOL: f64 = 1e-9;
const RANK_CUTOFF: f64 = 1e-10;

/// Best sup-norm approximation of `f` on a point subset.
#[derive(Debug, Clone, Serialize)]
pub struct ChebSolution {
    pub coefficients: Vec<Complex64>,
    pub distance: f64,
    pub active_points: Vec<String>,
    /// Certified lower bound on the optimal distance.
    pub lower_bound: f64,
}

pub(crate) struct RawCheb {
    pub coefficients: CVec,
    pub distance: f64,
    pub lower_bound: f64,
}

fn is_real(v: &[Complex64]) -> bool {
    v.iter().all(|z| z.im == 0.0)
}

fn error_vec(f: &[Complex64], cols: &[CVec], c: &[Complex64]) -> CVec {
    let mut e = f.to_vec();
    for (col, cj) in cols.iter().zip(c) {
        if *cj == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (ek, bk) in e.iter_mut().zip(col) {
            *ek -= cj * bk;
        }
    }
    e
}

fn max_modulus(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn lp_failure(what: &str, out: &LpOutcome) -> Error {
    Error::Solver(format!(
        "{what}: unexpected outcome {}",
        match out {
            LpOutcome::Optimal(_) => "optimal",
            LpOutcome::Infeasible(_) => "infeasible",
            LpOutcome::Unbounded => "unbounded",
        }
    ))
}

/// `min_z max_i (b_i - a_i . z)` through its dual
/// `max b.y` over `y >= 0`, `sum y = 1`, `A^T y = 0`, which has one row per
/// coordinate instead of one per constraint. Returns `z` from the dual
/// multipliers together with the dual optimum, a lower bound on the minimax
/// value.
fn minimax(a: &[Vec<f64>], b: &[f64], what: &str) -> Result<(Vec<f64>, f64)> {
    let p = a.first().map_or(0, Vec::len);
    let m = b.len();
    let mut lp = LinearProgram::new(vec![VarKind::NonNeg; m], b.iter().map(|v| -v).collect());
    for j in 0..p {
        lp.push(a.iter().map(|row| row[j]).collect(), Sense::Eq, 0.0);
    }
    lp.push(vec![1.0; m], Sense::Eq, 1.0);
    match lp.solve()? {
        LpOutcome::Optimal(s) => Ok((s.duals[..p].iter().map(|w| -w).collect(), -s.objective)),
        other => Err(lp_failure(what, &other)),
    }
}

/// Real Chebyshev LP over orthonormal columns `q`: returns coordinates and
/// the optimal value.
fn real_lp(f: &[f64], q: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
    let mut a = Vec::with_capacity(2 * f.len());
    let mut b = Vec::with_capacity(2 * f.len());
    for (x, &fx) in f.iter().enumerate() {
        let row: Vec<f64> = q.iter().map(|col| col[x]).collect();
        a.push(row.iter().map(|v| -v).collect());
        b.push(-fx);
        a.push(row);
        b.push(fx);
    }
    minimax(&a, &b, "real Chebyshev")
}

/// Complex Chebyshev LP with the modulus outer-approximated by half-planes
/// `Re(e^{-i theta} e(x)) <= t` for the given angles per point.
fn complex_lp(f: &[Complex64], q: &[CVec], angles: &[Vec<f64>]) -> Result<(CVec, f64)> {
    let k = q.len();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (x, thetas) in angles.iter().enumerate() {
        for &th in thetas {
            let rot = Complex64::from_polar(1.0, -th);
            // Re(rot (f - sum d q)) <= t
            let mut row = Vec::with_capacity(2 * k);
            row.extend(q.iter().map(|col| (rot * col[x]).re));
            row.extend(q.iter().map(|col| -(rot * col[x]).im));
            a.push(row);
            b.push((rot * f[x]).re);
        }
    }
    let (z, t) = minimax(&a, &b, "complex Chebyshev")?;
    Ok(((0..k).map(|i| Complex64::new(z[i], z[k + i])).collect(), t))
}

/// Minimizes `max |f - sum c_j cols_j|` over complex coefficients.
pub(crate) fn cheb_raw(f: &[Complex64], cols: &[CVec]) -> Result<RawCheb> {
    let zero = Complex64::new(0.0, 0.0);
    let o = linalg::orthonormalize_pivoted(cols, RANK_CUTOFF);
    if o.q.is_empty() || f.is_empty() {
        let d = max_modulus(f);
        return Ok(RawCheb {
            coefficients: vec![zero; cols.len()],
            distance: d,
            lower_bound: d,
        });
    }
    let real = is_real(f) && o.q.iter().all(|c| is_real(c));
    let (d, lower) = if real {
        let fr: Vec<f64> = f.iter().map(|z| z.re).collect();
        let qr: Vec<Vec<f64>> =
            o.q.iter()
                .map(|c| c.iter().map(|z| z.re).collect())
                .collect();
        let (d, t) = real_lp(&fr, &qr)?;
        (
            d.into_iter()
                .map(|v| Complex64::new(v, 0.0))
                .collect::<CVec>(),
            t,
        )
    } else {
        let base: Vec<f64> = (0..FACETS)
            .map(|l| 2.0 * PI * l as f64 / FACETS as f64)
            .collect();
        let mut angles = vec![base; f.len()];
        let mut best: Option<(CVec, f64)> = None;
        let mut lower = 0.0f64;
        for _ in 0..MAX_REFINEMENTS {
            let (d, t) = complex_lp(f, &o.q, &angles)?;
            lower = lower.max(t);
            let e = error_vec(f, &o.q, &d);
            let upper = max_modulus(&e);
            if best.as_ref().is_none_or(|(_, b)| upper < *b) {
                best = Some((d, upper));
            }
            let bu = best.as_ref().unwrap().1;
            if bu - lower <= GAP_TOL * bu.max(1.0) {
                break;
            }
            let mut added = false;
            for (x, ex) in e.iter().enumerate() {
                if ex.norm() > t + GAP_TOL * t.max(1.0) {
                    angles[x].push(ex.arg());
                    added = true;
                }
            }
            if !added {
                break;
            }
        }
        let (d, _) = best.unwrap();
        (d, lower)
    };
    let ck = linalg::coefficients_from_q(&o, &d);
    let mut coefficients = vec![zero; cols.len()];
    for (&j, c) in o.kept.iter().zip(ck) {
        coefficients[j] = c;
    }
    let distance = max_modulus(&error_vec(f, cols, &coefficients));
    Ok(RawCheb {
        coefficients,
        distance,
        lower_bound: lower.min(distance),
    })
}

fn restrict(f: &SampledFunction, points: &[usize]) -> CVec {
    points.iter().map(|&i| f.value(i)).collect()
}

fn check_inputs(f: &SampledFunction, basis: &[SampledFunction], points: &[usize]) -> Result<()> {
    for b in basis {
        ensure_same(b.space(), f.space(), "basis element on a different space")?;
    }
    if points.is_empty() {
        return Err(Error::Argument("empty point subset".into()));
    }
    if let Some(&p) = points.iter().find(|&&p| p >= f.len()) {
        return Err(Error::Argument(format!("point index {p} out of range")));
    }
    Ok(())
}

fn finish(
    f: &SampledFunction,
    basis: &[SampledFunction],
    points: &[usize],
    raw: RawCheb,
) -> ChebSolution {
    let cols: Vec<CVec> = basis.iter().map(|b| restrict(b, points)).collect();
    let e = error_vec(&restrict(f, points), &cols, &raw.coefficients);
    let active_points = points
        .iter()
        .zip(&e)
        .filter(|(_, ex)| ex.norm() >= raw.distance - ACTIVE_TOL)
        .map(|(&p, _)| f.space().id(p).to_string())
        .collect();
    ChebSolution {
        coefficients: raw.coefficients,
        distance: raw.distance,
        active_points,
        lower_bound: raw.lower_bound,
    }
}

/// Chebyshev distance from `f` to the span of `basis`, measured on `points`.
pub fn cheb_best_approx(
    f: &SampledFunction,
    basis: &[SampledFunction],
    points: &[usize],
) -> Result<ChebSolution> {
    check_inputs(f, basis, points)?;
    let fv = restrict(f, points);
    let cols: Vec<CVec> = basis.iter().map(|b| restrict(b, points)).collect();
    let raw = cheb_raw(&fv, &cols)?;
    Ok(finish(f, basis, points, raw))
}

/// Exhaustive grid search over coefficient boxes `[-r, r]` per real
/// coordinate. Real data use one coordinate per basis element, complex data
/// two; at most three coordinates are accepted.
pub fn brute_force_cheb_oracle(
    f: &SampledFunction,
    basis: &[SampledFunction],
    points: &[usize],
    grid_radius: f64,
    grid_steps: usize,
) -> Result<ChebSolution> {
    check_inputs(f, basis, points)?;
    if !(2..=201).contains(&grid_steps) || grid_radius <= 0.0 {
        return Err(Error::Argument(
            "grid needs 2..=201 steps and a positive radius".into(),
        ));
    }
    let fv = restrict(f, points);
    let cols: Vec<CVec> = basis.iter().map(|b| restrict(b, points)).collect();
    let real = is_real(&fv) && cols.iter().all(|c| is_real(c));
    let dims = if real { cols.len() } else { 2 * cols.len() };
    if dims > 3 {
        return Err(Error::Argument(format!(
            "oracle refuses {dims} real coefficient dimensions"
        )));
    }
    let h = 2.0 * grid_radius / (grid_steps - 1) as f64;
    let total = grid_steps.pow(dims as u32);
    let mut best = (vec![Complex64::new(0.0, 0.0); cols.len()], max_modulus(&fv));
    let mut coord = vec![0.0; dims];
    for idx in 0..total {
        let mut r = idx;
        for c in coord.iter_mut() {
            *c = -grid_radius + h * (r % grid_steps) as f64;
            r /= grid_steps;
        }
        let c: CVec = if real {
            coord.iter().map(|&v| Complex64::new(v, 0.0)).collect()
        } else {
            (0..cols.len())
                .map(|j| Complex64::new(coord[2 * j], coord[2 * j + 1]))
                .collect()
        };
        let d = max_modulus(&error_vec(&fv, &cols, &c));
        if d < best.1 {
            best = (c, d);
        }
    }
    let raw = RawCheb {
        coefficients: best.0,
        distance: best.1,
        lower_bound: 0.0,
    };
    Ok(finish(f, basis, points, raw))
}
