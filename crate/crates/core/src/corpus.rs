//! Seeded instance generators shared by tests, the acceptance suite and the
//! command-line scenarios.

use std::sync::Arc;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::box_cover::{
    build_cover, rat, CompactRegion, CoverResult, NeighborhoodFamily, RegionBox, TorusQuotient,
};
use crate::density::{estimated_mass, BadSetEstimateFixture};
use crate::error::{Error, Result};
use crate::fibered_space::{FiberedMap, FiberedSystem, FiniteSpace, WeightedMeasure};
use crate::function_algebra::{BaseAlgebra, PullbackModule, SampledFunction};
use crate::localization::preflight;
use crate::regular_vector::AvoidanceInstance;
use crate::tau_envelope::{closure_dominator, RiemannIntegrableDescriptor};

/// Largest module dimension the random corpus produces.
pub const MAX_MODULE_DIM: usize = 12;

/// Generator for instance `index` of the stream `stream` under `seed`.
pub fn rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    r.set_stream(stream);
    r
}

/// Stream identifiers, one per generator family.
pub mod streams {
    pub const LOCALIZATION: u64 = 1;
    pub const BROKEN: u64 = 2;
    pub const PIPELINE: u64 = 3;
    pub const NESTING: u64 = 4;
    pub const DOUBLE_CLOSURE: u64 = 5;
    pub const MASSES: u64 = 6;
    pub const DENSITY: u64 = 7;
    pub const BADSET: u64 = 8;
    pub const AVOIDANCE: u64 = 9;
    pub const CHEB: u64 = 10;
    pub const COVER: u64 = 11;
    pub const MONOTONE: u64 = 12;
}

fn random_value(rng: &mut ChaCha8Rng, complex: bool) -> Complex64 {
    let re = rng.gen_range(-1.0..1.0);
    let im = if complex {
        rng.gen_range(-1.0..1.0)
    } else {
        0.0
    };
    Complex64::new(re, im)
}

fn random_function(
    rng: &mut ChaCha8Rng,
    space: &Arc<FiniteSpace>,
    complex: bool,
) -> SampledFunction {
    let values = (0..space.len())
        .map(|i| {
            if space.is_infinity(i) {
                Complex64::new(0.0, 0.0)
            } else {
                random_value(rng, complex)
            }
        })
        .collect();
    SampledFunction::new(space.clone(), values).expect("finite values vanishing at infinity")
}

/// A random fibered system. Every target point of `0..ny` is hit; with
/// `infinity` both spaces get a point at infinity.
pub fn random_system(
    rng: &mut ChaCha8Rng,
    nx: usize,
    ny: usize,
    infinity: bool,
    weight_range: (f64, f64),
) -> Arc<FiberedSystem> {
    let nx = nx.max(ny);
    let mut assignment: Vec<usize> = (0..ny).collect();
    assignment.extend((ny..nx).map(|_| rng.gen_range(0..ny)));
    assignment.shuffle(rng);
    let mut weights: Vec<f64> = (0..nx)
        .map(|_| rng.gen_range(weight_range.0..weight_range.1))
        .collect();
    let mut xs: Vec<String> = (0..nx).map(|i| format!("x{i}")).collect();
    let mut ys: Vec<String> = (0..ny).map(|i| format!("y{i}")).collect();
    if infinity {
        xs.push("x_inf".into());
        ys.push("y_inf".into());
        assignment.push(ny);
        weights.push(0.0);
    }
    let x = Arc::new(FiniteSpace::new(xs, infinity.then_some("x_inf")).expect("unique ids"));
    let y = Arc::new(FiniteSpace::new(ys, infinity.then_some("y_inf")).expect("unique ids"));
    let map = FiberedMap::new(x.clone(), y, assignment).expect("valid assignment");
    let mu = WeightedMeasure::new(x, weights).expect("nonnegative weights");
    Arc::new(FiberedSystem::new(map, mu).expect("consistent system"))
}

/// A function and a module on a random system.
#[derive(Debug, Clone)]
pub struct ModuleInstance {
    pub module: PullbackModule,
    pub f: SampledFunction,
}

fn random_algebra(rng: &mut ChaCha8Rng, y: &Arc<FiniteSpace>) -> BaseAlgebra {
    if rng.gen_bool(0.6) {
        BaseAlgebra::all_functions(y.clone())
    } else {
        let k = rng.gen_range(1..=2);
        let complex = rng.gen_bool(0.3);
        let gens = (0..k).map(|_| random_function(rng, y, complex)).collect();
        BaseAlgebra::new(y.clone(), gens, 3).expect("positive degree")
    }
}

/// Instances passing the localization preflight with `|X| <= 40`,
/// `|Y| <= 10` and module dimension at most 12.
pub fn localization_instance(seed: u64, index: u64) -> ModuleInstance {
    let mut rng = rng(seed, streams::LOCALIZATION, index);
    loop {
        // the point at infinity counts toward the size limits
        let infinity = rng.gen_bool(0.25);
        let extra = usize::from(infinity);
        let ny = rng.gen_range(2..=10 - extra);
        let nx = rng.gen_range(ny..=40 - extra);
        let sys = random_system(&mut rng, nx, ny, infinity, (0.01, 1.0));
        let algebra = random_algebra(&mut rng, sys.target());
        let g = rng.gen_range(1..=(MAX_MODULE_DIM / ny).max(1));
        let complex = rng.gen_bool(0.3);
        let gens = (0..g)
            .map(|_| random_function(&mut rng, sys.source(), complex))
            .collect();
        let degree = if algebra.closure_degree() == 1 { 1 } else { 2 };
        let Ok(module) = PullbackModule::new(sys.clone(), algebra, gens, degree) else {
            continue;
        };
        if module.dimension() == 0 || module.dimension() > MAX_MODULE_DIM {
            continue;
        }
        if !preflight(&module).map(|p| p.passed).unwrap_or(false) {
            continue;
        }
        let f = {
            let c = rng.gen_bool(0.3);
            random_function(&mut rng, sys.source(), c)
        };
        return ModuleInstance { module, f };
    }
}

/// Instances whose algebra cannot separate the image: constants only, or a
/// single generator taking a repeated value.
pub fn broken_instance(seed: u64, index: u64) -> ModuleInstance {
    let mut rng = rng(seed, streams::BROKEN, index);
    loop {
        let ny = rng.gen_range(2..=8);
        let nx = rng.gen_range(ny..=30);
        let sys = random_system(&mut rng, nx, ny, false, (0.01, 1.0));
        let y = sys.target();
        let algebra = if rng.gen_bool(0.5) {
            BaseAlgebra::constants(y.clone())
        } else {
            let mut v: Vec<f64> = (0..y.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            v[1] = v[0];
            let g = SampledFunction::real(y.clone(), &v).expect("finite");
            BaseAlgebra::new(y.clone(), vec![g], 2).expect("positive degree")
        };
        let g = rng.gen_range(1..=3);
        let gens = (0..g)
            .map(|_| random_function(&mut rng, sys.source(), false))
            .collect();
        let Ok(module) = PullbackModule::new(sys.clone(), algebra, gens, 2) else {
            continue;
        };
        if module.dimension() == 0 {
            continue;
        }
        let f = {
            let c = rng.gen_bool(0.3);
            random_function(&mut rng, sys.source(), c)
        };
        return ModuleInstance { module, f };
    }
}

/// A module whose generators separate every fiber, plus a descriptor whose
/// bad points carry no mass.
#[derive(Debug, Clone)]
pub struct PipelineInstance {
    pub module: PullbackModule,
    pub phi: RiemannIntegrableDescriptor,
}

/// Generators separating each fiber: as many random real functions as the
/// largest fiber has points.
pub fn separating_module(rng: &mut ChaCha8Rng, sys: &Arc<FiberedSystem>) -> PullbackModule {
    let map = sys.map();
    let largest = (0..sys.target().len())
        .map(|y| map.fiber(y).len())
        .max()
        .unwrap_or(1)
        .max(1);
    let gens = (0..largest)
        .map(|_| random_function(rng, sys.source(), false))
        .collect();
    PullbackModule::new(
        sys.clone(),
        BaseAlgebra::all_functions(sys.target().clone()),
        gens,
        1,
    )
    .expect("valid module")
}

pub fn pipeline_instance(seed: u64, index: u64) -> PipelineInstance {
    let mut rng = rng(seed, streams::PIPELINE, index);
    let ny = rng.gen_range(2..=5);
    let nx = rng.gen_range(ny + 1..=12);
    let sys0 = random_system(&mut rng, nx, ny, false, (0.05, 1.0));
    let bad_count = rng.gen_range(0..=2usize);
    let mut idx: Vec<usize> = (0..nx).collect();
    idx.shuffle(&mut rng);
    let bad: Vec<usize> = idx[..bad_count].to_vec();
    let mut w = sys0.upstairs().weights().to_vec();
    for &b in &bad {
        w[b] = 0.0;
    }
    let mu = WeightedMeasure::new(sys0.source().clone(), w).expect("nonnegative");
    let sys = Arc::new(sys0.with_measure(mu).expect("same space"));
    let module = separating_module(&mut rng, &sys);
    let support: Vec<usize> = idx[..rng.gen_range(1..=nx)].to_vec();
    let mut v = vec![0.0; nx];
    for &x in &support {
        v[x] = rng.gen_range(-1.0..1.0);
    }
    let f = SampledFunction::real(sys.source().clone(), &v).expect("finite");
    let phi = RiemannIntegrableDescriptor::new(f, bad).expect("valid descriptor");
    PipelineInstance { module, phi }
}

/// A module, sample functions, and `(eps', eps)` pairs for which the
/// nesting argument applies.
#[derive(Debug, Clone)]
pub struct NestingInstance {
    pub module: PullbackModule,
    pub samples: Vec<SampledFunction>,
    pub pairs: Vec<(f64, f64)>,
}

pub fn nesting_instance(seed: u64, index: u64, pairs: usize) -> Result<NestingInstance> {
    let mut rng = rng(seed, streams::NESTING, index);
    let ny = rng.gen_range(2..=4);
    let nx = rng.gen_range(ny..=8);
    let sys = random_system(&mut rng, nx, ny, false, (0.05, 1.0));
    let module = if rng.gen_bool(0.5) {
        let one = SampledFunction::constant(sys.source().clone(), Complex64::new(1.0, 0.0));
        PullbackModule::new(
            sys.clone(),
            BaseAlgebra::all_functions(sys.target().clone()),
            vec![one],
            1,
        )?
    } else {
        separating_module(&mut rng, &sys)
    };
    let h = random_function(&mut rng, sys.source(), false).scaled(Complex64::new(0.3, 0.0));
    let m_prime = closure_dominator(&h, &module, sys.upstairs())?
        .ok_or_else(|| Error::Solver("no dominator for the sample".into()))?;
    let mass: f64 = m_prime
        .real_parts()
        .iter()
        .zip(sys.upstairs().weights())
        .map(|(v, w)| v * w)
        .sum();
    let pairs = (0..pairs)
        .map(|_| {
            let ep = mass + rng.gen_range(0.01..0.5);
            (ep, ep + rng.gen_range(0.01..0.5))
        })
        .collect();
    Ok(NestingInstance {
        module,
        samples: vec![h],
        pairs,
    })
}

/// `h` and an outer certificate `(a1, a2)` built from a closure pair and a
/// non-module spike, with an `eps` at which `(a1, a2)` is an `eps/2`
/// certificate and both inner closure masses stay below `eps/6`.
#[derive(Debug, Clone)]
pub struct DoubleClosureInstance {
    pub module: PullbackModule,
    pub h: SampledFunction,
    pub a1: SampledFunction,
    pub a2: SampledFunction,
    pub eps: f64,
}

pub fn double_closure_instance(seed: u64, index: u64) -> Result<DoubleClosureInstance> {
    let mut rng = rng(seed, streams::DOUBLE_CLOSURE, index);
    let ny = rng.gen_range(2..=4);
    let nx = rng.gen_range(ny + 1..=8);
    let sys = random_system(&mut rng, nx, ny, false, (0.05, 1.0));
    let one = SampledFunction::constant(sys.source().clone(), Complex64::new(1.0, 0.0));
    let module = PullbackModule::new(
        sys.clone(),
        BaseAlgebra::all_functions(sys.target().clone()),
        vec![one],
        1,
    )?;
    let h = random_function(&mut rng, sys.source(), false);
    let (m1, m2, _) = crate::tau_envelope::closure_pair(&h, &module, sys.upstairs())?
        .ok_or_else(|| Error::Solver("no closure pair".into()))?;
    let mut spike = vec![0.0; nx];
    spike[rng.gen_range(0..nx)] = rng.gen_range(-0.3..0.3);
    let r = SampledFunction::real(sys.source().clone(), &spike)?;
    let a1 = m1.plus(&r)?;
    let a2 = m2.plus(&r.abs())?;
    let mu = sys.upstairs();
    let inner = |g: &SampledFunction| -> Result<f64> {
        crate::tau_envelope::closure_pair(g, &module, mu)?
            .map(|p| p.2)
            .ok_or_else(|| Error::Solver("no inner closure pair".into()))
    };
    let outer_mass = mu.integrate_real(&a2.real_parts());
    let eps = (2.0 * outer_mass).max(6.0 * inner(&a1)?.max(inner(&a2)?)) * 1.1 + 0.01;
    Ok(DoubleClosureInstance {
        module,
        h,
        a1,
        a2,
        eps,
    })
}

/// Atom masses in `[0.1, 3]`.
pub fn mass_pair(seed: u64, index: u64) -> (f64, f64) {
    let mut rng = rng(seed, streams::MASSES, index);
    (rng.gen_range(0.1..3.0), rng.gen_range(0.1..3.0))
}

/// Six source points, a separating module, `phi`, and a perturbation `nu`.
#[derive(Debug, Clone)]
pub struct DensityInstance {
    pub module: PullbackModule,
    pub phi: RiemannIntegrableDescriptor,
    pub nu: Vec<f64>,
}

pub fn density_instance(seed: u64, index: u64) -> DensityInstance {
    let mut rng = rng(seed, streams::DENSITY, index);
    let ny = rng.gen_range(2..=4);
    let sys = random_system(&mut rng, 6, ny, false, (0.05, 0.5));
    let module = separating_module(&mut rng, &sys);
    let v: Vec<f64> = (0..6)
        .map(|_| {
            if rng.gen_bool(0.7) {
                rng.gen_range(-1.0..1.0)
            } else {
                0.0
            }
        })
        .collect();
    let f = SampledFunction::real(sys.source().clone(), &v).expect("finite");
    let phi = RiemannIntegrableDescriptor::new(f, vec![]).expect("valid descriptor");
    let nu = (0..6).map(|_| rng.gen_range(0.0..1.0)).collect();
    DensityInstance { module, phi, nu }
}

/// Random sample region and neighborhood family for the covering lemma.
#[derive(Debug, Clone)]
pub struct CoverInstance {
    pub space: TorusQuotient,
    pub region: CompactRegion,
    pub family: NeighborhoodFamily,
}

pub fn cover_instance(seed: u64, index: u64) -> Result<CoverInstance> {
    let mut rng = rng(seed, streams::COVER, index);
    let n = rng.gen_range(1..=3);
    let m = rng.gen_range(0..=n);
    let space = TorusQuotient::new(n, m)?;
    let r_min = if n == 3 {
        rng.gen_range(0.45..0.8)
    } else {
        rng.gen_range(0.3..0.8)
    };
    let family = if rng.gen_bool(0.5) {
        NeighborhoodFamily::constant(r_min)?
    } else {
        NeighborhoodFamily::from_fn(r_min, move |x| r_min + 0.1 * x[0].sin().abs())?
    };
    let region = if rng.gen_bool(0.5) {
        let boxes = (0..rng.gen_range(1..=3))
            .map(|_| {
                let lo: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let hi: Vec<f64> = lo.iter().map(|l| l + rng.gen_range(0.0..0.4)).collect();
                RegionBox::from_f64(&lo, &hi)
            })
            .collect::<Result<Vec<_>>>()?;
        CompactRegion::from_boxes(&space, boxes)?
    } else {
        let pts: Vec<Vec<f64>> = (0..rng.gen_range(1..=6))
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        CompactRegion::from_points(&space, &pts, rng.gen_range(0.0..0.1))?
    };
    Ok(CoverInstance {
        space,
        region,
        family,
    })
}

fn point_in_closed(
    space: &TorusQuotient,
    b: &crate::box_cover::Box,
    p: &[f64],
    scale: f64,
) -> bool {
    let q: Vec<_> = p.iter().map(|&x| rat(x).expect("finite")).collect();
    if scale == 1.0 {
        return b.contains_closed(space, &q);
    }
    let wider =
        crate::box_cover::Box::new(b.center.clone(), &b.width * rat(scale).expect("finite"))
            .expect("positive width");
    wider.contains_closed(space, &q)
}

/// A bad-set fixture whose regions come from a box cover, with
/// `c'_G = 2^n`.
#[derive(Debug, Clone)]
pub struct BadSetInstance {
    pub fixture: BadSetEstimateFixture,
    pub cover: CoverResult,
    /// Source points lying over the annulus and over no region.
    pub annulus_points: Vec<usize>,
    pub outside_points: Vec<usize>,
}

pub fn badset_instance(seed: u64, index: u64) -> Result<BadSetInstance> {
    let mut rng = rng(seed, streams::BADSET, index);
    let n = rng.gen_range(1..=2);
    let m = rng.gen_range(0..=n);
    let space = TorusQuotient::new(n, m)?;
    let lo: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..0.5)).collect();
    let hi: Vec<f64> = lo.iter().map(|l| l + rng.gen_range(0.1..0.3)).collect();
    let region = CompactRegion::from_boxes(&space, vec![RegionBox::from_f64(&lo, &hi)?])?;
    let family = NeighborhoodFamily::constant(rng.gen_range(0.4..0.8))?;
    let cover = build_cover(&space, &region, &family)?;

    // target points: samples around the region, some well outside it
    let ny = 40 + 20 * n;
    let pts: Vec<Vec<f64>> = (0..ny)
        .map(|_| {
            (0..n)
                .map(|i| rng.gen_range(lo[i] - 0.3..hi[i] + 0.3))
                .collect()
        })
        .collect();
    let regions = cover.boxes.len();
    let w: Vec<Vec<usize>> = cover
        .boxes
        .iter()
        .map(|b| {
            (0..ny)
                .filter(|&y| point_in_closed(&space, b, &pts[y], 1.0))
                .collect()
        })
        .collect();
    let mut covered = vec![false; ny];
    for wi in &w {
        for &y in wi {
            covered[y] = true;
        }
    }
    let w_prime: Vec<Vec<usize>> = cover
        .boxes
        .iter()
        .zip(&w)
        .map(|(b, wi)| {
            let mut s = wi.clone();
            s.extend((0..ny).filter(|&y| !covered[y] && point_in_closed(&space, b, &pts[y], 1.4)));
            s.sort_unstable();
            s
        })
        .collect();
    let mut in_c1 = vec![false; ny];
    for &y in w_prime.iter().flatten() {
        in_c1[y] = true;
    }
    let mut in_b = in_c1.clone();
    for y in 0..ny {
        if !in_c1[y] {
            if rng.gen_bool(0.2) {
                in_c1[y] = true;
                in_b[y] = true;
            } else if rng.gen_bool(0.5) {
                in_b[y] = true;
            }
        }
    }
    let mut annulus = vec![false; ny];
    for (wi, wpi) in w.iter().zip(&w_prime) {
        for &y in wpi {
            if !wi.contains(&y) {
                annulus[y] = true;
            }
        }
    }

    let mut assignment = Vec::new();
    for y in 0..ny {
        for _ in 0..rng.gen_range(1..=2) {
            assignment.push(y);
        }
    }
    let nx = assignment.len();
    let weights: Vec<f64> = assignment
        .iter()
        .map(|&y| {
            if annulus[y] {
                rng.gen_range(0.0..0.002)
            } else {
                rng.gen_range(0.0..0.05)
            }
        })
        .collect();
    let bad: Vec<bool> = assignment
        .iter()
        .map(|&y| covered[y] && rng.gen_bool(0.15))
        .collect();
    let weights: Vec<f64> = weights
        .iter()
        .zip(&bad)
        .map(|(w, b)| if *b { w * 0.1 } else { *w })
        .collect();
    let xs = Arc::new(FiniteSpace::numbered("x", nx));
    let ys = Arc::new(FiniteSpace::numbered("y", ny));
    let map = FiberedMap::new(xs.clone(), ys.clone(), assignment.clone())?;
    let system = Arc::new(FiberedSystem::new(
        map,
        WeightedMeasure::new(xs.clone(), weights)?,
    )?);

    let (eps1, eps3) = (0.05, 0.01);
    let c_g = rng.gen_range(2.0..4.0);
    let mut hat_h = Vec::with_capacity(regions);
    let mut a = Vec::with_capacity(regions);
    for i in 0..regions {
        let in_w: Vec<bool> = (0..ny).map(|y| w[i].contains(&y)).collect();
        let in_wp: Vec<bool> = (0..ny).map(|y| w_prime[i].contains(&y)).collect();
        let hv: Vec<f64> = (0..nx)
            .map(|x| {
                if !in_wp[assignment[x]] {
                    0.0
                } else if bad[x] {
                    rng.gen_range(1.0..c_g)
                } else {
                    rng.gen_range(0.0..eps1)
                }
            })
            .collect();
        let av: Vec<f64> = (0..ny)
            .map(|y| {
                if in_w[y] {
                    rng.gen_range(1.0..1.0 + eps3)
                } else if in_wp[y] {
                    rng.gen_range(0.0..1.0 + eps3)
                } else if in_b[y] {
                    rng.gen_range(0.0..eps3)
                } else {
                    0.0
                }
            })
            .collect();
        hat_h.push(SampledFunction::real(xs.clone(), &hv)?);
        a.push(SampledFunction::real(ys.clone(), &av)?);
    }
    let h2: Vec<f64> = (0..nx)
        .map(|x| {
            if in_c1[assignment[x]] {
                rng.gen_range(1.0..2.0)
            } else {
                rng.gen_range(0.0..1.0)
            }
        })
        .collect();
    let m_eps1 = hat_h.iter().flat_map(|h| h.moduli()).fold(0.0, f64::max);
    let annulus_x: Vec<usize> = (0..nx).filter(|&x| annulus[assignment[x]]).collect();
    let eps2 = system.upstairs().mass_of(&annulus_x);
    let mut fixture = BadSetEstimateFixture {
        system,
        bad,
        hat_h,
        a,
        hat_h2: SampledFunction::real(xs, &h2)?,
        w,
        w_prime,
        c1: (0..ny).filter(|&y| in_c1[y]).collect(),
        band: (0..ny).filter(|&y| in_b[y]).collect(),
        c_g,
        c_prime_g: (1usize << n) as f64,
        eps1,
        eps2,
        eps3,
        m_eps1,
        n_eps1: regions,
        eps: 0.0,
    };
    fixture.eps = 2.0 * estimated_mass(&fixture) * 1.05 + 1e-9;
    fixture.validate()?;
    let outside_points = (0..nx).filter(|&x| !in_b[assignment[x]]).collect();
    Ok(BadSetInstance {
        fixture,
        cover,
        annulus_points: annulus_x,
        outside_points,
    })
}

/// Five fixtures, each breaking one named estimate, derived from valid ones.
pub fn violated_badset_fixtures(seed: u64) -> Result<Vec<(BadSetEstimateFixture, &'static str)>> {
    use crate::density::{
        SET_ANNULUS, SET_BAD_COVERED, SET_ELSEWHERE, SET_FINAL_MASS, SET_GOOD_COVERED,
    };
    let mut index = 0;
    let mut next = |need: &dyn Fn(&BadSetInstance) -> bool| -> Result<BadSetInstance> {
        loop {
            let inst = badset_instance(seed, 10_000 + index)?;
            index += 1;
            if need(&inst) {
                return Ok(inst);
            }
        }
    };
    let covered_x = |fx: &BadSetEstimateFixture, want_bad: bool| -> Option<(usize, usize)> {
        let map = fx.system.map();
        (0..fx.bad.len()).find_map(|x| {
            if fx.bad[x] != want_bad {
                return None;
            }
            fx.w.iter()
                .position(|wi| wi.contains(&map.image_of(x)))
                .map(|i| (x, i))
        })
    };
    let set_value = |f: &SampledFunction, at: usize, v: f64| -> Result<SampledFunction> {
        let mut vals = f.real_parts();
        vals[at] = v;
        SampledFunction::real(f.space().clone(), &vals)
    };
    let mut out = Vec::new();

    // understated overlap constant, with a term at its full band value
    let inst = next(&|i| covered_x(&i.fixture, false).is_some())?;
    let mut fx = inst.fixture;
    let (x, i) = covered_x(&fx, false).expect("checked");
    let y = fx.system.map().image_of(x);
    fx.hat_h[i] = set_value(&fx.hat_h[i], x, fx.eps1)?;
    fx.a[i] = set_value(&fx.a[i], y, 1.0 + fx.eps3)?;
    fx.c_prime_g = 0.5;
    out.push((fx, SET_GOOD_COVERED));

    // good values zeroed so only the bad bound can fail
    let inst = next(&|i| covered_x(&i.fixture, true).is_some())?;
    let mut fx = inst.fixture;
    let (x, i) = covered_x(&fx, true).expect("checked");
    let y = fx.system.map().image_of(x);
    for k in 0..fx.hat_h.len() {
        let vals: Vec<f64> = fx.hat_h[k]
            .real_parts()
            .iter()
            .enumerate()
            .map(|(j, v)| if fx.bad[j] { *v } else { 0.0 })
            .collect();
        fx.hat_h[k] = SampledFunction::real(fx.hat_h[k].space().clone(), &vals)?;
    }
    fx.hat_h[i] = set_value(&fx.hat_h[i], x, fx.c_g)?;
    fx.a[i] = set_value(&fx.a[i], y, 1.0 + fx.eps3)?;
    fx.c_prime_g = 0.5;
    out.push((fx, SET_BAD_COVERED));

    // understated sup M with a live annulus term
    let inst = next(&|i| !i.annulus_points.is_empty())?;
    let mut fx = inst.fixture;
    let x = inst.annulus_points[0];
    let y = fx.system.map().image_of(x);
    let i = fx
        .w_prime
        .iter()
        .position(|w| w.contains(&y))
        .expect("annulus lies in some W'");
    let v = if fx.bad[x] { 1.0 } else { fx.eps1 };
    fx.hat_h[i] = set_value(&fx.hat_h[i], x, v)?;
    fx.a[i] = set_value(&fx.a[i], y, 1.0)?;
    fx.m_eps1 = 0.0;
    out.push((fx, SET_ANNULUS));

    // a term living outside the band, where nothing bounds a
    let inst = next(&|i| !i.outside_points.is_empty())?;
    let mut fx = inst.fixture;
    let x = inst.outside_points[0];
    let y = fx.system.map().image_of(x);
    fx.hat_h[0] = set_value(&fx.hat_h[0], x, 1.0)?;
    fx.a[0] = set_value(&fx.a[0], y, 1.0)?;
    out.push((fx, SET_ELSEWHERE));

    // eps too small for the final mass
    let inst = next(&|_| true)?;
    let mut fx = inst.fixture;
    fx.eps = estimated_mass(&fx) / 10.0;
    out.push((fx, SET_FINAL_MASS));
    Ok(out)
}

/// Small-integer instances; roughly one in ten has a functional vanishing
/// on all of `S`.
pub fn avoidance_instance(seed: u64, index: u64) -> (AvoidanceInstance, bool) {
    let mut rng = rng(seed, streams::AVOIDANCE, index);
    let dim = rng.gen_range(1..=6);
    let ns = rng.gen_range(1..=4);
    let nt = rng.gen_range(1..=5);
    let int_vec = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..dim).map(|_| rng.gen_range(-2i32..=2) as f64).collect()
    };
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    let infeasible = dim > 1 && rng.gen_bool(0.1);
    loop {
        let mut t: Vec<Vec<f64>> = (0..nt).map(|_| int_vec(&mut rng)).collect();
        let mut s: Vec<Vec<f64>> = (0..ns).map(|_| int_vec(&mut rng)).collect();
        if infeasible {
            let l = t[0].clone();
            let ll = dot(&l, &l);
            if ll == 0.0 {
                continue;
            }
            s = s
                .into_iter()
                .map(|v| {
                    let lv = dot(&l, &v);
                    v.iter().zip(&l).map(|(a, b)| a * ll - b * lv).collect()
                })
                .collect();
            if s.iter().all(|v| v.iter().all(|x| *x == 0.0)) {
                continue;
            }
            t.shuffle(&mut rng);
        } else if t.iter().any(|l| s.iter().all(|v| dot(l, v) == 0.0)) {
            continue;
        }
        return (AvoidanceInstance { s, t_dual: t }, !infeasible);
    }
}

/// A real Chebyshev instance with at most three coefficients.
#[derive(Debug, Clone)]
pub struct ChebInstance {
    pub f: SampledFunction,
    pub basis: Vec<SampledFunction>,
    pub points: Vec<usize>,
}

pub fn cheb_instance(seed: u64, index: u64) -> ChebInstance {
    let mut rng = rng(seed, streams::CHEB, index);
    let n = rng.gen_range(3..=8);
    let space = Arc::new(FiniteSpace::numbered("p", n));
    let k = rng.gen_range(1..=3);
    let basis = (0..k)
        .map(|_| random_function(&mut rng, &space, false))
        .collect();
    let f = random_function(&mut rng, &space, false);
    ChebInstance {
        f,
        basis,
        points: (0..n).collect(),
    }
}

/// A module, a function, and increasing eps values.
pub fn monotone_instance(seed: u64, index: u64) -> (PullbackModule, SampledFunction, Vec<f64>) {
    let mut rng = rng(seed, streams::MONOTONE, index);
    let ny = rng.gen_range(2..=4);
    let nx = rng.gen_range(ny..=8);
    let sys = random_system(&mut rng, nx, ny, false, (0.05, 1.0));
    let gens = (0..rng.gen_range(1..=2))
        .map(|_| random_function(&mut rng, sys.source(), false))
        .collect();
    let module = PullbackModule::new(
        sys.clone(),
        BaseAlgebra::all_functions(sys.target().clone()),
        gens,
        1,
    )
    .expect("valid module");
    let h = {
        let c = rng.gen_bool(0.3);
        random_function(&mut rng, sys.source(), c)
    };
    let mut eps: Vec<f64> = (0..6).map(|_| rng.gen_range(0.01..3.0)).collect();
    eps.sort_by(f64::total_cmp);
    (module, h, eps)
}
