//! One line per acceptance criterion. Every check recomputes its verdict
//! from raw values instead of trusting the flags the library reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use fiberwise::box_cover::{build_cover, verify_cover, CoverResult, TorusQuotient};
use fiberwise::cheb_lp::{brute_force_cheb_oracle, cheb_best_approx, envelope_feasible};
use fiberwise::corpus;
use fiberwise::density::{
    transfer_convergence, verify_bad_set_estimates, MeasureSequence, SequenceRule,
};
use fiberwise::function_algebra::{sup_norm, PullbackModule, SampledFunction};
use fiberwise::localization::{construct_approximant, localize_distance};
use fiberwise::obstruction::{
    build_fixture, check_trace, contradiction_replay, infeasibility_threshold, ModuleChoice,
};
use fiberwise::regular_vector::find_regular_vector;
use fiberwise::tau_envelope::{
    double_closure_certificate, main_theorem_pipeline, verify_nesting, CertificateLedger,
    PipelineOptions,
};
use fiberwise::Error;
use num_bigint::BigInt;
use num_rational::BigRational;

const SEED: u64 = 2024;

type Verdict = Result<String, String>;

fn fail<T>(msg: impl Into<String>) -> Result<T, String> {
    Err(msg.into())
}

fn core<T>(r: fiberwise::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Chebyshev distance of `f` to the module on a subset of points.
fn distance_on(
    f: &SampledFunction,
    module: &PullbackModule,
    points: &[usize],
) -> Result<f64, String> {
    Ok(core(cheb_best_approx(f, module.basis(), points))?.distance)
}

/// Independent global and per-fiber distances over the fibers the report
/// names.
fn recomputed(
    f: &SampledFunction,
    module: &PullbackModule,
    fibers: &[String],
) -> Result<(f64, f64), String> {
    let sys = module.system();
    let all: Vec<usize> = (0..f.len()).collect();
    let global = distance_on(f, module, &all)?;
    let mut sup_fiber = 0.0f64;
    for id in fibers {
        let y = core(sys.target().index_of(id))?;
        let pts = sys.map().fiber(y);
        if !pts.is_empty() {
            sup_fiber = sup_fiber.max(distance_on(f, module, &pts)?);
        }
    }
    Ok((global, sup_fiber))
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for i in 0..100 {
        let inst = corpus::localization_instance(SEED, i);
        let s = inst.module.system();
        if s.source().len() > 40 || s.target().len() > 10 || inst.module.dimension() > 12 {
            return fail(format!("instance {i} exceeds the size limits"));
        }
        let r = core(localize_distance(&inst.f, &inst.module))?;
        if !r.preflight.passed {
            return fail(format!("instance {i} does not pass preflight"));
        }
        let ids: Vec<String> = r.fiber_distances.keys().cloned().collect();
        let (global, sup_fiber) = recomputed(&inst.f, &inst.module, &ids)?;
        let rel = (global - sup_fiber).abs() / (1.0 + sup_norm(&inst.f));
        worst = worst.max(rel);
        if rel > 1e-6 {
            return fail(format!(
                "instance {i}: |global - sup fiber| = {:e} relative",
                rel
            ));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs > 60.0 {
        return fail(format!("took {secs:.1} s"));
    }
    Ok(format!(
        "100 systems, worst relative gap {worst:.2e}, {secs:.1} s"
    ))
}

fn criterion_2() -> Verdict {
    let mut checked = 0;
    for i in 0..100 {
        let inst = corpus::localization_instance(SEED, i);
        for eps in [0.5, 0.1, 0.01] {
            let a = core(construct_approximant(&inst.f, &inst.module, eps))?;
            let err = sup_norm(&core(inst.f.minus(&a.assembled))?);
            let r = core(localize_distance(&inst.f, &inst.module))?;
            if err > r.sup_fiber_distance + eps {
                return fail(format!(
                    "instance {i} at {eps}: error {err} above {} + {eps}",
                    r.sup_fiber_distance
                ));
            }
            let scale = 1.0 + sup_norm(&a.assembled);
            if inst.module.span_residual(&a.assembled) > 1e-6 * scale {
                return fail(format!(
                    "instance {i} at {eps}: approximant leaves the module"
                ));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} approximants within the bound"))
}

fn criterion_3() -> Verdict {
    let mut violated = 0;
    for i in 0..100 {
        let inst = corpus::broken_instance(SEED, i);
        let r = core(localize_distance(&inst.f, &inst.module))?;
        violated += usize::from(!r.preflight.passed);
        let ids: Vec<String> = r.fiber_distances.keys().cloned().collect();
        let (global, sup_fiber) = recomputed(&inst.f, &inst.module, &ids)?;
        if global < sup_fiber - 1e-7 {
            return fail(format!(
                "instance {i}: global {global} below max fiber {sup_fiber}"
            ));
        }
    }
    Ok(format!("100 systems, {violated} failing preflight"))
}

fn rational_to_int(r: &BigRational) -> Result<i64, String> {
    if !r.is_integer() {
        return fail(format!("{r} is not an integer"));
    }
    i64::try_from(&r.to_integer()).map_err(|e| e.to_string())
}

/// Largest number of closed boxes sharing a point, on the integer grid
/// obtained by scaling lengths by `20 * 2^k`.
fn integer_multiplicity(cover: &CoverResult) -> Result<usize, String> {
    let space = cover.space;
    let scale = BigRational::from_integer(BigInt::from(20i64 << cover.k_final));
    let period = 20i64 << cover.k_final;
    let mut boxes = Vec::with_capacity(cover.boxes.len());
    for b in &cover.boxes {
        let half = rational_to_int(&(&b.width * &scale / BigRational::from_integer(2.into())))?;
        let mut lo = Vec::with_capacity(space.n);
        for c in &b.center {
            lo.push(rational_to_int(&(c * &scale))? - half);
        }
        boxes.push((lo, 2 * half));
    }
    let contains = |(lo, len): &(Vec<i64>, i64), p: &[i64]| {
        (0..space.n).all(|i| {
            if space.is_circular(i) {
                *len >= period || (p[i] - lo[i]).rem_euclid(period) <= *len
            } else {
                lo[i] <= p[i] && p[i] <= lo[i] + len
            }
        })
    };
    // a deepest point can be moved onto a lower endpoint on every axis
    let mut best = 0;
    for anchor in &boxes {
        let inside: Vec<&(Vec<i64>, i64)> = boxes
            .iter()
            .filter(|b| meets(anchor, b, space, period))
            .collect();
        let axes: Vec<Vec<i64>> = (0..space.n)
            .map(|i| {
                let mut v: Vec<i64> = inside.iter().map(|b| b.0[i]).collect();
                v.push(anchor.0[i]);
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect();
        let mut idx = vec![0usize; space.n];
        loop {
            let p: Vec<i64> = (0..space.n).map(|i| axes[i][idx[i]]).collect();
            if contains(anchor, &p) {
                best = best.max(inside.iter().filter(|b| contains(b, &p)).count());
            }
            let mut axis = 0;
            while axis < space.n {
                idx[axis] += 1;
                if idx[axis] < axes[axis].len() {
                    break;
                }
                idx[axis] = 0;
                axis += 1;
            }
            if axis == space.n {
                break;
            }
        }
    }
    Ok(best)
}

fn meets(a: &(Vec<i64>, i64), b: &(Vec<i64>, i64), space: TorusQuotient, period: i64) -> bool {
    (0..space.n).all(|i| {
        if space.is_circular(i) {
            a.1 >= period
                || b.1 >= period
                || (b.0[i] - a.0[i]).rem_euclid(period) <= a.1
                || (a.0[i] - b.0[i]).rem_euclid(period) <= b.1
        } else {
            a.0[i] <= b.0[i] + b.1 && b.0[i] <= a.0[i] + a.1
        }
    })
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let eleven_tenths = BigRational::new(11.into(), 10.into());
    let mut worst = 0usize;
    for i in 0..100 {
        let inst = core(corpus::cover_instance(SEED, i))?;
        let cover = core(build_cover(&inst.space, &inst.region, &inst.family))?;
        let bound = 1usize << inst.space.n;
        let mult = integer_multiplicity(&cover)?;
        if mult != cover.multiplicity {
            return fail(format!(
                "region {i}: integer multiplicity {mult}, reported {}",
                cover.multiplicity
            ));
        }
        if mult > bound {
            return fail(format!("region {i}: multiplicity {mult} above {bound}"));
        }
        worst = worst.max(mult);
        let pow = BigRational::from_integer(BigInt::from(1u64 << cover.k_final));
        if cover.boxes.iter().any(|b| &b.width * &pow != eleven_tenths) {
            return fail(format!(
                "region {i}: a width is not 11/10 of the dyadic side"
            ));
        }
        let check = core(verify_cover(&inst.region, &inst.family, &cover, 5000))?;
        if check.subordinated != check.total || cover.subordination.len() != cover.boxes.len() {
            return fail(format!(
                "region {i}: {} of {} boxes subordinated",
                check.subordinated, check.total
            ));
        }
        if !check.coverage_certified || check.samples_uncovered > 0 {
            return fail(format!("region {i}: coverage not certified"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs > 120.0 {
        return fail(format!("took {secs:.1} s"));
    }
    Ok(format!(
        "100 regions, largest multiplicity {worst}, {secs:.1} s"
    ))
}

/// Worst pointwise violation of `|phi - m1| <= m2` and the mass of `m2`.
fn envelope_numbers(
    phi: &SampledFunction,
    m1: &SampledFunction,
    m2: &SampledFunction,
    w: &[f64],
) -> (f64, f64) {
    let mut worst = f64::NEG_INFINITY;
    let mut mass = 0.0;
    for x in 0..phi.len() {
        worst = worst.max((phi.value(x) - m1.value(x)).norm() - m2.value(x).re);
        mass += w[x] * m2.value(x).re;
    }
    (worst, mass)
}

fn criterion_5() -> Verdict {
    let mut certs = 0;
    for i in 0..30 {
        let inst = corpus::pipeline_instance(SEED, i);
        let w = inst.module.system().upstairs().weights();
        for eps in [1.0, 0.1, 0.01] {
            let cert = core(main_theorem_pipeline(
                &inst.phi,
                &inst.module,
                eps,
                &PipelineOptions::default(),
            ))
            .map_err(|e| format!("instance {i} at {eps}: {e}"))?;
            let (worst, mass) = envelope_numbers(&inst.phi.function, &cert.m1, &cert.m2, w);
            if worst > 1e-9 || !(mass < eps) {
                return fail(format!(
                    "instance {i} at {eps}: violation {worst:e}, mass {mass}"
                ));
            }
            let CertificateLedger::MainTheorem(b) = &cert.ledger else {
                return fail(format!("instance {i}: unexpected ledger"));
            };
            let mc = &b.dominating_mc;
            let mc_mass: f64 = (0..mc.len()).map(|x| w[x] * mc.value(x).re).sum();
            if !(b.eps1 < eps / (3.0 * sup_norm(mc) + mc_mass)) {
                return fail(format!(
                    "instance {i} at {eps}: budget inequality fails for eps1 {}",
                    b.eps1
                ));
            }
            certs += 1;
        }
    }
    Ok(format!("{certs} certificates re-verified"))
}

fn criterion_6() -> Verdict {
    let mut witnessed = 0;
    for i in 0..10 {
        let inst = core(corpus::nesting_instance(SEED, i, 5))?;
        let mu = inst.module.system().upstairs();
        let r = core(verify_nesting(&inst.module, mu, &inst.pairs, &inst.samples))?;
        for c in &r.cases {
            if let Some(v) = &c.violation {
                return fail(format!("instance {i}: {v}"));
            }
            match c.witness_mass {
                Some(m) if c.applicable && m < c.eps => witnessed += 1,
                _ => {
                    return fail(format!(
                        "instance {i}: pair ({}, {}) not witnessed",
                        c.eps_prime, c.eps
                    ))
                }
            }
        }
    }
    if witnessed < 50 {
        return fail(format!("only {witnessed} nesting pairs"));
    }
    for i in 0..20 {
        let inst = core(corpus::double_closure_instance(SEED, i))?;
        let w = inst.module.system().upstairs().weights();
        let (outer, outer_mass) = envelope_numbers(&inst.h, &inst.a1, &inst.a2, w);
        if outer > 1e-9 || !(outer_mass < inst.eps / 2.0) {
            return fail(format!(
                "instance {i}: outer pair is not an eps/2 certificate"
            ));
        }
        let cert = core(double_closure_certificate(
            &inst.h,
            &inst.a1,
            &inst.a2,
            &inst.module,
            inst.eps,
        ))
        .map_err(|e| format!("double closure {i}: {e}"))?;
        let (worst, mass) = envelope_numbers(&inst.h, &cert.m1, &cert.m2, w);
        if worst > 1e-9 || !(mass < inst.eps) {
            return fail(format!(
                "double closure {i}: violation {worst:e}, mass {mass}"
            ));
        }
    }
    Ok(format!(
        "{witnessed} nesting pairs, 20 double-closure certificates"
    ))
}

fn criterion_7() -> Verdict {
    let mut worst = 0.0f64;
    for i in 0..20 {
        let (d1, d2) = corpus::mass_pair(SEED, i);
        let fx = core(build_fixture(d1, d2, 1))?;
        let pull = core(infeasibility_threshold(&fx, ModuleChoice::Pullback))?;
        let expected = 0.5 * (d1 + d2);
        worst = worst.max((pull.threshold - expected).abs());
        if (pull.threshold - expected).abs() > 1e-3 {
            return fail(format!(
                "pair {i}: threshold {} vs {expected}",
                pull.threshold
            ));
        }
        let bound = 0.5 * d1;
        if pull.threshold < bound {
            return fail(format!(
                "pair {i}: threshold {} below {bound}",
                pull.threshold
            ));
        }
        let sep = core(infeasibility_threshold(&fx, ModuleChoice::Separating))?;
        if sep.threshold > 1e-4 {
            return fail(format!("pair {i}: separating threshold {}", sep.threshold));
        }
        let trace = core(contradiction_replay(&fx, 0.4 * (d1 + d2)))?;
        if !trace.contradiction || !check_trace(&trace) {
            return fail(format!("pair {i}: replay does not close"));
        }
    }
    Ok(format!("20 mass pairs, worst threshold error {worst:.1e}"))
}

fn criterion_8() -> Verdict {
    let (lo, hi) = (100, 200);
    let mut worst = 0.0f64;
    for i in 0..10 {
        let inst = corpus::density_instance(SEED, i);
        let mu = inst.module.system().upstairs();
        let phi = inst.phi.function.real_parts();
        let limit = mu.integrate_real(&phi);
        let seq = core(MeasureSequence::new(
            mu.clone(),
            SequenceRule::Perturbation {
                nu: inst.nu.clone(),
            },
        ))?;
        for eps in [0.5, 0.1] {
            let cert = core(main_theorem_pipeline(
                &inst.phi,
                &inst.module,
                eps,
                &PipelineOptions::default(),
            ))?;
            let r = core(transfer_convergence(
                &seq,
                &inst.phi.function,
                &inst.module,
                Some(&cert),
                eps,
                200,
                1e-6,
            ))?;
            if !r.hypothesis_holds {
                return fail(format!(
                    "seed {i}: hypothesis gate rejected a convergent sequence"
                ));
            }
            for n in lo..=hi {
                let mass: f64 = (0..phi.len())
                    .map(|x| (mu.weight(x) + inst.nu[x] / n as f64) * phi[x])
                    .sum();
                let dev = (mass - limit).abs();
                worst = worst.max(dev);
                if dev > 2.0 * eps + 1e-6 {
                    return fail(format!("seed {i} at {eps}: n = {n} deviates by {dev}"));
                }
            }
        }
    }
    for i in 0..5 {
        let inst = corpus::density_instance(SEED, i);
        let mu = inst.module.system().upstairs();
        let seq = core(MeasureSequence::new(
            mu.clone(),
            SequenceRule::Alternating {
                nu: inst.nu.clone(),
            },
        ))?;
        let cert = core(main_theorem_pipeline(
            &inst.phi,
            &inst.module,
            0.1,
            &PipelineOptions::default(),
        ))?;
        let r = core(transfer_convergence(
            &seq,
            &inst.phi.function,
            &inst.module,
            Some(&cert),
            0.1,
            200,
            1e-6,
        ))?;
        if r.hypothesis_holds || r.transfer_claimed {
            return fail(format!("adversarial {i} passed the hypothesis gate"));
        }
    }
    Ok(format!(
        "10 seeds, worst tail deviation {worst:.2e}; 5 adversarial rejected"
    ))
}

fn criterion_9() -> Verdict {
    for i in 0..20 {
        let inst = core(corpus::badset_instance(SEED, i))?;
        let n = inst.cover.space.n;
        if inst.fixture.c_prime_g != (1u64 << n) as f64 {
            return fail(format!("fixture {i}: c'_G = {}", inst.fixture.c_prime_g));
        }
        let r = core(verify_bad_set_estimates(&inst.fixture))?;
        if !r.passed || r.checks.iter().any(|c| !c.holds) {
            return fail(format!("fixture {i}: {:?} fails", r.first_failure()));
        }
        let fx = &inst.fixture;
        let map = fx.system.map();
        let w = fx.system.upstairs().weights();
        let lift = fx.eps3 * fx.m_eps1 * fx.n_eps1 as f64;
        let mass: f64 = (0..w.len())
            .map(|x| {
                let y = map.image_of(x);
                let h1: f64 =
                    fx.a.iter()
                        .zip(&fx.hat_h)
                        .map(|(a, h)| a.value(y).re * h.value(x).re)
                        .sum();
                w[x] * (h1 + lift * fx.hat_h2.value(x).re)
            })
            .sum();
        if !(r.final_mass < inst.fixture.eps / 2.0)
            || (mass - r.final_mass).abs() > 1e-9 * (1.0 + mass)
        {
            return fail(format!(
                "fixture {i}: final mass {} vs eps/2 {}",
                r.final_mass,
                inst.fixture.eps / 2.0
            ));
        }
    }
    let violated = core(corpus::violated_badset_fixtures(SEED))?;
    if violated.len() != 5 {
        return fail(format!("{} violated fixtures", violated.len()));
    }
    for (i, (fx, expected)) in violated.iter().enumerate() {
        let r = core(verify_bad_set_estimates(fx))?;
        if r.passed || r.first_failure() != Some(*expected) {
            return fail(format!(
                "violated {i}: expected {expected}, got {:?}",
                r.first_failure()
            ));
        }
    }
    Ok("20 fixtures pass, 5 violated fixtures rejected by name".into())
}

fn criterion_10() -> Verdict {
    let mut found = 0;
    for i in 0..1000 {
        let (inst, feasible) = corpus::avoidance_instance(SEED, i);
        if inst.dimension() > 6 {
            return fail(format!("instance {i} has dimension {}", inst.dimension()));
        }
        let got = match find_regular_vector(&inst) {
            Ok(r) => {
                let mut v = vec![0.0; inst.dimension()];
                for (k, s) in inst.s.iter().enumerate() {
                    let p = (r.t as f64).powi(k as i32);
                    for (vj, sj) in v.iter_mut().zip(s) {
                        *vj += p * sj;
                    }
                }
                let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if v.iter()
                    .zip(&r.v)
                    .any(|(a, b)| (a - b).abs() > 1e-12 * vn.max(1.0))
                {
                    return fail(format!("instance {i}: v is not sum t^i s_i"));
                }
                for lam in &inst.t_dual {
                    let ln = lam.iter().map(|x| x * x).sum::<f64>().sqrt();
                    let val: f64 = lam.iter().zip(&r.v).map(|(a, b)| a * b).sum();
                    if !(val.abs() > 1e-12 * ln * vn) {
                        return fail(format!("instance {i}: |lambda(v)| = {val:e}"));
                    }
                }
                found += 1;
                true
            }
            Err(Error::Precondition(_)) => false,
            Err(e) => return fail(format!("instance {i}: {e}")),
        };
        if got != feasible {
            return fail(format!("instance {i}: expected {feasible}, got {got}"));
        }
        if inst.s.len() <= 3 {
            let oracle = core(fiberwise::regular_vector::brute_force_avoidance_oracle(
                &inst, 3,
            ))?;
            if oracle.is_some() != got {
                return fail(format!("instance {i}: oracle disagrees"));
            }
        }
    }
    Ok(format!("1000 instances, {found} vectors found"))
}

fn criterion_11() -> Verdict {
    let mut worst = 0.0f64;
    for i in 0..50 {
        let inst = corpus::cheb_instance(SEED, i);
        let lp = core(cheb_best_approx(&inst.f, &inst.basis, &inst.points))?;
        let cmax = lp.coefficients.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let radius = 1.5 * cmax + 0.5;
        let steps = if inst.basis.len() <= 2 { 201 } else { 61 };
        let oracle = core(brute_force_cheb_oracle(
            &inst.f,
            &inst.basis,
            &inst.points,
            radius,
            steps,
        ))?;
        let h = 2.0 * radius / (steps - 1) as f64;
        let allowed = 2.0 * h * inst.basis.iter().map(sup_norm).sum::<f64>();
        let diff = oracle.distance - lp.distance;
        worst = worst.max(diff.abs());
        if diff < -1e-9 || diff > allowed {
            return fail(format!(
                "instance {i}: LP {} vs oracle {}",
                lp.distance, oracle.distance
            ));
        }
    }
    for i in 0..100 {
        let (module, h, eps) = corpus::monotone_instance(SEED, i);
        let mu = module.system().upstairs();
        let flags: Vec<bool> = eps
            .iter()
            .map(|&e| envelope_feasible(&h, module.basis(), mu, e).map(|c| c.is_feasible()))
            .collect::<fiberwise::Result<_>>()
            .map_err(|e| e.to_string())?;
        // eps is increasing, so feasibility may only switch on
        if flags.windows(2).any(|w| w[0] && !w[1]) {
            return fail(format!("instance {i}: feasibility {flags:?} along {eps:?}"));
        }
    }
    Ok(format!(
        "50 oracle comparisons (worst {worst:.1e}), 100 monotone ladders"
    ))
}

fn read_tree(dir: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
        out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), bytes);
    }
    Ok(out)
}

fn criterion_12() -> Verdict {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/acceptance");
    let mut trees = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let summary =
            fiberwise_cli::suite::run_suite(&configs, dir.path()).map_err(|e| e.to_string())?;
        if summary.exit_code() != 0 {
            let bad: Vec<&str> = summary
                .entries
                .iter()
                .filter(|e| e.status != "pass")
                .map(|e| e.config.as_str())
                .collect();
            return fail(format!("suite did not pass: {bad:?}"));
        }
        trees.push(read_tree(dir.path())?);
    }
    if trees[0] != trees[1] {
        let differing: Vec<_> = trees[0]
            .iter()
            .filter(|(k, v)| trees[1].get(*k) != Some(v))
            .map(|(k, _)| k.display().to_string())
            .collect();
        return fail(format!("outputs differ: {differing:?}"));
    }
    Ok(format!(
        "{} files identical across two runs",
        trees[0].len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("localization equality", criterion_1),
        ("constructive approximant", criterion_2),
        ("easy inequality", criterion_3),
        ("covering lemma", criterion_4),
        ("main pipeline", criterion_5),
        ("closure lemmas", criterion_6),
        ("obstruction threshold", criterion_7),
        ("density transfer", criterion_8),
        ("bad-set estimates", criterion_9),
        ("hyperplane avoidance", criterion_10),
        ("solver soundness", criterion_11),
        ("reproducibility", criterion_12),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg}", k + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg}", k + 1);
            }
        }
    }
    println!(
        "{} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
