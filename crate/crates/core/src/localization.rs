//! Fiberwise localization of the Chebyshev distance to a pullback module and
//! the partition-of-unity approximant.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::cheb_lp::{cheb_best_approx, cheb_raw};
use crate::error::{Error, Result};
use crate::fibered_space::{ensure_same, fibers_of};
use crate::function_algebra::{
    conjugate_closure_check, pullback, sup_norm, PullbackModule, SampledFunction,
};
use crate::linalg::CVec;

pub const DENSITY_TOLERANCE: f64 = 1e-8;
pub const CLOSURE_TOLERANCE: f64 = 1e-9;
pub const EASY_SLACK: f64 = 1e-7;
pub const EQUALITY_TOLERANCE: f64 = 1e-6;

/// Hypothesis checks run before the localization identity is asserted.
#[derive(Debug, Clone, Serialize)]
pub struct Preflight {
    /// Worst Chebyshev distance from a point indicator on `p(X)` to the
    /// algebra span, measured on `p(X)`.
    pub algebra_distance: f64,
    pub closure_residual: f64,
    pub conjugation_residual: f64,
    pub passed: bool,
}

/// Indicator Chebyshev distances on the image of `p`, one per image point.
fn indicator_distances(module: &PullbackModule) -> Result<Vec<(usize, f64, CVec)>> {
    let image = module.system().map().finite_image();
    let alg: Vec<CVec> = module
        .algebra_basis()
        .iter()
        .map(|a| image.iter().map(|&y| a.value(y)).collect())
        .collect();
    image
        .iter()
        .enumerate()
        .map(|(k, &y)| {
            let mut target = vec![Complex64::new(0.0, 0.0); image.len()];
            target[k] = Complex64::new(1.0, 0.0);
            let sol = cheb_raw(&target, &alg)?;
            Ok((y, sol.distance, sol.coefficients))
        })
        .collect()
}

pub fn preflight(module: &PullbackModule) -> Result<Preflight> {
    let algebra_distance = indicator_distances(module)?
        .iter()
        .map(|(_, d, _)| *d)
        .fold(0.0, f64::max);
    let closure_residual = module.closure_residual();
    let conj = conjugate_closure_check(module);
    Ok(Preflight {
        algebra_distance,
        closure_residual,
        conjugation_residual: conj.worst_residual,
        passed: algebra_distance <= DENSITY_TOLERANCE
            && closure_residual <= CLOSURE_TOLERANCE
            && conj.closed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalizationStatus {
    /// Hypotheses hold and the identity was confirmed.
    Verified,
    /// Hypotheses fail; only the easy inequality is meaningful.
    HypothesesViolated,
    /// Hypotheses hold but the gap exceeds tolerance.
    EqualityFailed,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalizationReport {
    pub global_distance: f64,
    pub fiber_distances: BTreeMap<String, f64>,
    pub sup_fiber_distance: f64,
    pub gap: f64,
    pub maximizing_fibers: Vec<String>,
    pub preflight: Preflight,
    pub easy_inequality_holds: bool,
    pub status: LocalizationStatus,
}

/// One CSV line per fiber.
#[derive(Debug, Clone, Serialize)]
pub struct FiberRow {
    pub fiber_id: String,
    pub fiber_size: usize,
    pub fiber_distance: f64,
}

/// Finite fibers over finite image points, keyed by target index.
fn finite_fibers(module: &PullbackModule) -> BTreeMap<usize, Vec<usize>> {
    let map = module.system().map();
    fibers_of(map)
        .into_iter()
        .filter(|(y, xs)| !xs.is_empty() && !map.target().is_infinity(*y))
        .collect()
}

pub fn fiber_rows(module: &PullbackModule, report: &LocalizationReport) -> Vec<FiberRow> {
    let target = module.system().target();
    finite_fibers(module)
        .into_iter()
        .map(|(y, xs)| {
            let id = target.id(y).to_string();
            FiberRow {
                fiber_distance: report.fiber_distances[&id],
                fiber_id: id,
                fiber_size: xs.len(),
            }
        })
        .collect()
}

pub fn localize_distance(
    f: &SampledFunction,
    module: &PullbackModule,
) -> Result<LocalizationReport> {
    ensure_same(
        f.space(),
        module.system().source(),
        "function not on the module source",
    )?;
    let pre = preflight(module)?;
    localize_with(f, module, pre)
}

pub(crate) fn localize_with(
    f: &SampledFunction,
    module: &PullbackModule,
    preflight: Preflight,
) -> Result<LocalizationReport> {
    let basis = module.basis();
    let src = module.system().source();
    let finite = src.finite_indices();
    let global = if finite.is_empty() {
        0.0
    } else {
        cheb_best_approx(f, basis, &finite)?.distance
    };
    let target = module.system().target();
    let mut fiber_distances = BTreeMap::new();
    let mut sup = 0.0f64;
    for (y, xs) in finite_fibers(module) {
        let d = cheb_best_approx(f, basis, &xs)?.distance;
        sup = sup.max(d);
        fiber_distances.insert(target.id(y).to_string(), d);
    }
    let maximizing_fibers = fiber_distances
        .iter()
        .filter(|(_, d)| **d >= sup - 1e-9)
        .map(|(k, _)| k.clone())
        .collect();
    let gap = global - sup;
    let status = if !preflight.passed {
        LocalizationStatus::HypothesesViolated
    } else if gap.abs() <= EQUALITY_TOLERANCE * (1.0 + sup_norm(f)) {
        LocalizationStatus::Verified
    } else {
        LocalizationStatus::EqualityFailed
    };
    Ok(LocalizationReport {
        global_distance: global,
        fiber_distances,
        sup_fiber_distance: sup,
        gap,
        maximizing_fibers,
        easy_inequality_holds: global >= sup - EASY_SLACK,
        preflight,
        status,
    })
}

/// One region of the partition: the target point, the algebra replacement of
/// its indicator and the indicator residual.
#[derive(Debug, Clone, Serialize)]
pub struct RegionEntry {
    pub target_point: String,
    pub sigma_coefficients: Vec<Complex64>,
    pub sigma_residual: f64,
    pub local_error: f64,
}

#[derive(Debug, Clone)]
pub struct PartitionApproximant {
    pub regions: Vec<RegionEntry>,
    pub locals: Vec<SampledFunction>,
    pub assembled: SampledFunction,
    pub achieved_error: f64,
    pub sup_fiber_distance: f64,
    pub bound: f64,
    pub span_residual: f64,
}

pub fn construct_approximant(
    f: &SampledFunction,
    module: &PullbackModule,
    eps: f64,
) -> Result<PartitionApproximant> {
    if !(eps > 0.0) {
        return Err(Error::Argument(format!("eps must be positive, got {eps}")));
    }
    let report = localize_distance(f, module)?;
    if !report.preflight.passed {
        return Err(Error::hypothesis(
            "module hypotheses",
            format!(
                "preflight failed: algebra distance {:e}, closure residual {:e}, conjugation residual {:e}",
                report.preflight.algebra_distance,
                report.preflight.closure_residual,
                report.preflight.conjugation_residual
            ),
        ));
    }
    let d_sup = report.sup_fiber_distance;
    let basis = module.basis();
    let system = module.system();
    let src = system.source().clone();
    let fibers = finite_fibers(module);

    let mut locals = Vec::with_capacity(fibers.len());
    let mut local_errors = Vec::with_capacity(fibers.len());
    for xs in fibers.values() {
        let sol = cheb_best_approx(f, basis, xs)?;
        let mut g = SampledFunction::zero(src.clone());
        for (b, c) in basis.iter().zip(&sol.coefficients) {
            g = g.plus(&b.scaled(*c))?;
        }
        local_errors.push(sol.distance);
        locals.push(g);
    }
    let gmax = locals.iter().map(sup_norm).fold(0.0, f64::max);
    let n = fibers.len().max(1) as f64;
    let sigma_budget = eps / (4.0 * (1.0 + gmax) * n);

    let image = system.map().finite_image();
    let alg = module.algebra_basis();
    let y_space = system.target().clone();
    let mut regions = Vec::with_capacity(fibers.len());
    let mut assembled = SampledFunction::zero(src.clone());
    let mut worst: Option<(usize, f64)> = None;
    let dists = indicator_distances(module)?;
    for (((y, dist, coeffs), g), local_error) in dists.into_iter().zip(&locals).zip(&local_errors) {
        if dist > sigma_budget && worst.is_none_or(|(_, w)| dist > w) {
            worst = Some((y, dist));
        }
        let mut sigma = vec![Complex64::new(0.0, 0.0); y_space.len()];
        for (a, c) in alg.iter().zip(&coeffs) {
            for (s, av) in sigma.iter_mut().zip(a.values()) {
                *s += c * av;
            }
        }
        let sigma = SampledFunction::new(y_space.clone(), sigma)?;
        assembled = assembled.plus(&pullback(system.map(), &sigma)?.times(g)?)?;
        regions.push(RegionEntry {
            target_point: y_space.id(y).to_string(),
            sigma_coefficients: coeffs,
            sigma_residual: dist,
            local_error: *local_error,
        });
    }
    debug_assert_eq!(image.len(), regions.len());
    if let Some((y, dist)) = worst {
        return Err(Error::Budget {
            stage: format!("indicator replacement at {}", y_space.id(y)),
            achieved: dist,
            required: sigma_budget,
        });
    }
    let achieved_error = sup_norm(&f.minus(&assembled)?);
    let span_residual = module.span_residual(&assembled);
    Ok(PartitionApproximant {
        regions,
        locals,
        assembled,
        achieved_error,
        sup_fiber_distance: d_sup,
        bound: d_sup + eps,
        span_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fibered_space::{FiberedMap, FiberedSystem, FiniteSpace, WeightedMeasure};
    use crate::function_algebra::BaseAlgebra;
    use std::sync::Arc;

    fn four_point(algebra_all: bool, fiber_constant: bool) -> PullbackModule {
        let x = Arc::new(FiniteSpace::new(["a", "b", "c", "d"], None).unwrap());
        let y = Arc::new(FiniteSpace::new(["y1", "y2"], None).unwrap());
        let map = FiberedMap::new(x.clone(), y.clone(), vec![0, 0, 1, 1]).unwrap();
        let mu = WeightedMeasure::new(x.clone(), vec![1.0; 4]).unwrap();
        let sys = Arc::new(FiberedSystem::new(map, mu).unwrap());
        let alg = if algebra_all {
            BaseAlgebra::all_functions(y)
        } else {
            BaseAlgebra::constants(y)
        };
        let gen = if fiber_constant {
            SampledFunction::real(x, &[1.0; 4]).unwrap()
        } else {
            SampledFunction::real(x, &[1.0, 2.0, 3.0, 4.0]).unwrap()
        };
        PullbackModule::new(sys, alg, vec![gen], 1).unwrap()
    }

    #[test]
    fn pullback_module_fiber_midpoints() {
        let m = four_point(true, true);
        let f = SampledFunction::real(m.system().source().clone(), &[0.0, 1.0, 0.0, 2.0]).unwrap();
        let r = localize_distance(&f, &m).unwrap();
        assert!(r.preflight.passed);
        assert!((r.fiber_distances["y1"] - 0.5).abs() < 1e-9);
        assert!((r.fiber_distances["y2"] - 1.0).abs() < 1e-9);
        assert!((r.global_distance - 1.0).abs() < 1e-9);
        assert_eq!(r.status, LocalizationStatus::Verified);
        assert_eq!(r.maximizing_fibers, vec!["y2".to_string()]);
    }

    #[test]
    fn member_has_zero_distances() {
        let m = four_point(true, false);
        let f = m.basis()[0].scaled(Complex64::new(2.5, 0.0));
        let r = localize_distance(&f, &m).unwrap();
        assert!(r.global_distance < 1e-9 && r.sup_fiber_distance < 1e-9);
    }

    #[test]
    fn constants_only_algebra_is_flagged() {
        // M = constants on X; f = (0,0,1,1) is fiber-constant, so every fiber
        // distance is 0, while the global distance is 1/2
        let m = four_point(false, true);
        let f = SampledFunction::real(m.system().source().clone(), &[0.0, 0.0, 1.0, 1.0]).unwrap();
        let r = localize_distance(&f, &m).unwrap();
        assert!(!r.preflight.passed);
        assert_eq!(r.status, LocalizationStatus::HypothesesViolated);
        assert!(r.sup_fiber_distance < 1e-9);
        assert!((r.global_distance - 0.5).abs() < 1e-9);
        assert!(r.easy_inequality_holds);
    }

    #[test]
    fn approximant_budgets() {
        let m = four_point(true, true);
        let f = SampledFunction::real(m.system().source().clone(), &[0.0, 1.0, 0.0, 2.0]).unwrap();
        let mut prev = f64::INFINITY;
        for eps in [0.5, 0.1, 0.01] {
            let a = construct_approximant(&f, &m, eps).unwrap();
            assert!(a.achieved_error <= a.sup_fiber_distance + eps);
            assert!(a.achieved_error <= prev + 1e-9);
            assert!(a.span_residual <= 1e-9);
            prev = a.achieved_error;
        }
        let a = construct_approximant(&f, &m, 0.1).unwrap();
        assert!(a.achieved_error <= 1.1);
    }

    #[test]
    fn approximant_reproduces_members() {
        let m = four_point(true, false);
        let f = m.basis()[0].scaled(Complex64::new(-1.5, 0.0));
        let a = construct_approximant(&f, &m, 0.1).unwrap();
        assert!(a.achieved_error <= 0.1);
    }

    #[test]
    fn csv_rows_follow_fibers() {
        let m = four_point(true, true);
        let f = SampledFunction::real(m.system().source().clone(), &[0.0, 1.0, 0.0, 2.0]).unwrap();
        let r = localize_distance(&f, &m).unwrap();
        let rows = fiber_rows(&m, &r);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].fiber_id, "y1");
        assert_eq!(rows[0].fiber_size, 2);
    }
}
