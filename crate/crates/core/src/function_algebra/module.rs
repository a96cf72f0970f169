use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::function::{pullback, FunctionDocument, SampledFunction};
use crate::error::{Error, Result};
use crate::fibered_space::{ensure_same, FiberedSystem, FiniteSpace};
use crate::linalg::{self, CVec};

/// Rank cutoff relative to the largest candidate norm.
pub const RANK_CUTOFF: f64 = 1e-10;
/// Residual tolerance for span-membership checks.
pub const SPAN_TOLERANCE: f64 = 1e-9;

pub const DEFAULT_DEGREE_A: usize = 3;
pub const DEFAULT_DEGREE_M: usize = 2;

/// Nondecreasing index tuples of length `degree` over `0..k`, in
/// lexicographic order.
pub(crate) fn multisets(k: usize, degree: usize) -> Vec<Vec<usize>> {
    fn rec(k: usize, left: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..k {
            cur.push(i);
            rec(k, left - 1, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, degree, 0, &mut Vec::new(), &mut out);
    out
}

/// A generated subalgebra of functions on the base space.
#[derive(Debug, Clone)]
pub struct BaseAlgebra {
    space: Arc<FiniteSpace>,
    generators: Vec<SampledFunction>,
    closure_degree: usize,
    extended: Vec<SampledFunction>,
}

impl BaseAlgebra {
    /// Conjugates of non-real generators are appended automatically.
    pub fn new(
        space: Arc<FiniteSpace>,
        generators: Vec<SampledFunction>,
        closure_degree: usize,
    ) -> Result<Self> {
        if closure_degree == 0 {
            return Err(Error::Argument("closure degree must be positive".into()));
        }
        for g in &generators {
            ensure_same(g.space(), &space, "algebra generator not on the base space")?;
        }
        let mut extended = generators.clone();
        extended.extend(generators.iter().filter(|g| !g.is_real()).map(|g| g.conj()));
        Ok(Self {
            space,
            generators,
            closure_degree,
            extended,
        })
    }

    /// All indicator functions of finite points, degree 1.
    pub fn all_functions(space: Arc<FiniteSpace>) -> Self {
        let gens = space
            .finite_indices()
            .into_iter()
            .map(|i| SampledFunction::indicator(space.clone(), &[i]).expect("index in range"))
            .collect();
        Self::new(space, gens, 1).expect("degree is positive")
    }

    /// The constant function alone.
    pub fn constants(space: Arc<FiniteSpace>) -> Self {
        let one = SampledFunction::constant(space.clone(), Complex64::new(1.0, 0.0));
        Self::new(space, vec![one], 1).expect("degree is positive")
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn generators(&self) -> &[SampledFunction] {
        &self.generators
    }

    /// Generators followed by the appended conjugates.
    pub fn extended_generators(&self) -> &[SampledFunction] {
        &self.extended
    }

    pub fn closure_degree(&self) -> usize {
        self.closure_degree
    }

    /// Monomial in the extended generators; the empty tuple is the unit.
    pub(crate) fn monomial(&self, idx: &[usize]) -> CVec {
        let mut v = vec![Complex64::new(1.0, 0.0); self.space.len()];
        for &i in idx {
            for (vk, gk) in v.iter_mut().zip(self.extended[i].values()) {
                *vk *= gk;
            }
        }
        v
    }

    /// Orthonormal basis of the span of all monomials of degree `1..=D_A`.
    pub fn span_basis(&self) -> Vec<SampledFunction> {
        let k = self.extended.len();
        let cands: Vec<CVec> = (1..=self.closure_degree)
            .flat_map(|d| multisets(k, d))
            .map(|m| self.monomial(&m))
            .collect();
        linalg::orthonormalize(&cands, RANK_CUTOFF)
            .q
            .into_iter()
            .map(|v| SampledFunction::from_raw(self.space.clone(), v))
            .collect()
    }
}

/// A `p*A`-module on the source space, materialized to a finite basis.
#[derive(Debug, Clone)]
pub struct PullbackModule {
    system: Arc<FiberedSystem>,
    algebra: BaseAlgebra,
    module_generators: Vec<SampledFunction>,
    closure_degree: usize,
    basis: Vec<SampledFunction>,
    basis_degrees: Vec<usize>,
    real_basis: Vec<SampledFunction>,
    algebra_basis: Vec<SampledFunction>,
    warnings: Vec<String>,
}

impl PullbackModule {
    pub fn new(
        system: Arc<FiberedSystem>,
        algebra: BaseAlgebra,
        module_generators: Vec<SampledFunction>,
        closure_degree: usize,
    ) -> Result<Self> {
        if closure_degree == 0 {
            return Err(Error::Argument(
                "module closure degree must be positive".into(),
            ));
        }
        ensure_same(
            algebra.space(),
            system.target(),
            "algebra not on the target space",
        )?;
        if algebra.generators().is_empty() || module_generators.is_empty() {
            return Err(Error::Argument("generator lists must be nonempty".into()));
        }
        for m in &module_generators {
            ensure_same(
                m.space(),
                system.source(),
                "module generator not on the source space",
            )?;
        }
        let mut module = Self {
            system,
            algebra_basis: algebra.span_basis(),
            algebra,
            module_generators,
            closure_degree,
            basis: Vec::new(),
            basis_degrees: Vec::new(),
            real_basis: Vec::new(),
            warnings: Vec::new(),
        };
        module.materialize();
        Ok(module)
    }

    fn materialize(&mut self) {
        let map = self.system.map();
        let src = self.system.source().clone();
        let k = self.algebra.extended.len();
        let pulled: Vec<CVec> = self
            .algebra
            .extended
            .iter()
            .map(|g| {
                pullback(map, g)
                    .expect("algebra lives on target")
                    .values()
                    .to_vec()
            })
            .collect();
        // degree-major so an element of degree d only involves candidates of degree <= d
        let mut cands: Vec<CVec> = Vec::new();
        let mut degrees = Vec::new();
        for d in 0..=self.closure_degree {
            let monos = multisets(k, d);
            for m in &self.module_generators {
                for mono in &monos {
                    let mut v = m.values().to_vec();
                    for &i in mono {
                        for (vk, gk) in v.iter_mut().zip(&pulled[i]) {
                            *vk *= gk;
                        }
                    }
                    cands.push(v);
                    degrees.push(d);
                }
            }
        }
        let o = linalg::orthonormalize(&cands, RANK_CUTOFF);
        if o.q.is_empty() {
            self.warnings
                .push("all module candidates vanish; basis is empty".to_string());
        }
        self.basis_degrees = o.kept.iter().map(|&j| degrees[j]).collect();
        self.basis =
            o.q.into_iter()
                .map(|v| SampledFunction::from_raw(src.clone(), v))
                .collect();

        let mut parts: Vec<CVec> = Vec::with_capacity(2 * self.basis.len());
        for b in &self.basis {
            parts.push(
                b.real_parts()
                    .into_iter()
                    .map(|r| Complex64::new(r, 0.0))
                    .collect(),
            );
            parts.push(
                b.imag_parts()
                    .into_iter()
                    .map(|r| Complex64::new(r, 0.0))
                    .collect(),
            );
        }
        self.real_basis = linalg::orthonormalize(&parts, RANK_CUTOFF)
            .q
            .into_iter()
            .map(|v| {
                let re: Vec<f64> = v.iter().map(|z| z.re).collect();
                SampledFunction::from_real_raw(src.clone(), &re)
            })
            .collect();
    }

    pub fn system(&self) -> &Arc<FiberedSystem> {
        &self.system
    }

    pub fn algebra(&self) -> &BaseAlgebra {
        &self.algebra
    }

    pub fn module_generators(&self) -> &[SampledFunction] {
        &self.module_generators
    }

    pub fn closure_degree(&self) -> usize {
        self.closure_degree
    }

    pub fn basis(&self) -> &[SampledFunction] {
        &self.basis
    }

    /// Degree of the candidate that introduced each basis element.
    pub fn basis_degrees(&self) -> &[usize] {
        &self.basis_degrees
    }

    /// Orthonormal basis of the real-valued functions `Re b`, `Im b`.
    pub fn real_basis(&self) -> &[SampledFunction] {
        &self.real_basis
    }

    /// Orthonormal basis of the materialized algebra span on the target.
    pub fn algebra_basis(&self) -> &[SampledFunction] {
        &self.algebra_basis
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    fn q_vectors(basis: &[SampledFunction]) -> Vec<CVec> {
        basis.iter().map(|b| b.values().to_vec()).collect()
    }

    /// Residual of projecting `f` onto the complex module span, relative to
    /// `max(1, |f|)`.
    pub fn span_residual(&self, f: &SampledFunction) -> f64 {
        let q = Self::q_vectors(&self.basis);
        let n = linalg::norm(f.values());
        linalg::projection_residual(f.values(), &q) / n.max(1.0)
    }

    /// Same as [`span_residual`](Self::span_residual) against the real span.
    pub fn real_span_residual(&self, f: &SampledFunction) -> f64 {
        let q = Self::q_vectors(&self.real_basis);
        let n = linalg::norm(f.values());
        linalg::projection_residual(f.values(), &q) / n.max(1.0)
    }

    /// Degree-bounded stability: for each basis element of degree `< D_M` and
    /// each algebra generator `a`, the relative residual of `(p*a) b`.
    pub fn stability_residual(&self) -> f64 {
        let map = self.system.map();
        let q = Self::q_vectors(&self.basis);
        let mut worst = 0.0f64;
        for (b, &d) in self.basis.iter().zip(&self.basis_degrees) {
            if d >= self.closure_degree {
                continue;
            }
            for a in self.algebra.extended_generators() {
                let prod = pullback(map, a)
                    .expect("target function")
                    .times(b)
                    .expect("source");
                let n = linalg::norm(prod.values());
                if n > 0.0 {
                    worst = worst.max(linalg::projection_residual(prod.values(), &q) / n);
                }
            }
        }
        worst
    }

    /// Full closure under the materialized algebra span: the worst relative
    /// residual of `(p*a) b` over algebra-span and module basis vectors.
    pub fn closure_residual(&self) -> f64 {
        let map = self.system.map();
        let q = Self::q_vectors(&self.basis);
        let mut worst = 0.0f64;
        for a in &self.algebra_basis {
            let pa = pullback(map, a).expect("target function");
            for b in &self.basis {
                let prod = pa.times(b).expect("source");
                let n = linalg::norm(prod.values());
                if n > 0.0 {
                    worst = worst.max(linalg::projection_residual(prod.values(), &q) / n);
                }
            }
        }
        worst
    }

    pub fn to_document(&self) -> ModuleDocument {
        ModuleDocument {
            algebra_generators: self
                .algebra
                .generators()
                .iter()
                .map(|g| g.to_document("Y"))
                .collect(),
            module_generators: self
                .module_generators
                .iter()
                .map(|g| g.to_document("X"))
                .collect(),
            degree_a: self.algebra.closure_degree(),
            degree_m: self.closure_degree,
        }
    }

    pub fn from_document(system: Arc<FiberedSystem>, doc: &ModuleDocument) -> Result<Self> {
        let y = system.target().clone();
        let x = system.source().clone();
        let alg = doc
            .algebra_generators
            .iter()
            .map(|d| SampledFunction::from_document(y.clone(), d))
            .collect::<Result<Vec<_>>>()?;
        let gens = doc
            .module_generators
            .iter()
            .map(|d| SampledFunction::from_document(x.clone(), d))
            .collect::<Result<Vec<_>>>()?;
        let algebra = BaseAlgebra::new(y, alg, doc.degree_a)?;
        Self::new(system, algebra, gens, doc.degree_m)
    }
}

/// The orthonormal module basis, in materialization order.
pub fn materialize_basis(module: &PullbackModule) -> Vec<SampledFunction> {
    module.basis.clone()
}

/// Outcome of checking the module span against pointwise conjugation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConjugationReport {
    pub closed: bool,
    pub worst_residual: f64,
}

/// True iff the conjugate of every basis element lies in the span within
/// [`SPAN_TOLERANCE`].
pub fn conjugate_closure_check(module: &PullbackModule) -> ConjugationReport {
    let q = PullbackModule::q_vectors(&module.basis);
    let worst = module
        .basis
        .iter()
        .map(|b| linalg::projection_residual(b.conj().values(), &q))
        .fold(0.0, f64::max);
    ConjugationReport {
        closed: worst <= SPAN_TOLERANCE,
        worst_residual: worst,
    }
}

/// JSON module descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleDocument {
    pub algebra_generators: Vec<FunctionDocument>,
    pub module_generators: Vec<FunctionDocument>,
    #[serde(rename = "degree_A", default = "default_degree_a")]
    pub degree_a: usize,
    #[serde(rename = "degree_M", default = "default_degree_m")]
    pub degree_m: usize,
}

fn default_degree_a() -> usize {
    DEFAULT_DEGREE_A
}

fn default_degree_m() -> usize {
    DEFAULT_DEGREE_M
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fibered_space::{FiberedMap, WeightedMeasure};

    fn system(assign: Vec<usize>, ny: usize) -> Arc<FiberedSystem> {
        let x = Arc::new(FiniteSpace::numbered("x", assign.len()));
        let y = Arc::new(FiniteSpace::numbered("y", ny));
        let map = FiberedMap::new(x.clone(), y, assign.clone()).unwrap();
        let mu = WeightedMeasure::new(x, vec![1.0; assign.len()]).unwrap();
        Arc::new(FiberedSystem::new(map, mu).unwrap())
    }

    fn one(space: &Arc<FiniteSpace>) -> SampledFunction {
        SampledFunction::constant(space.clone(), Complex64::new(1.0, 0.0))
    }

    #[test]
    fn multisets_are_lexicographic() {
        assert_eq!(
            multisets(3, 2),
            vec![
                vec![0, 0],
                vec![0, 1],
                vec![0, 2],
                vec![1, 1],
                vec![1, 2],
                vec![2, 2]
            ]
        );
        assert_eq!(multisets(2, 0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn unit_generator_spans_pullbacks() {
        let sys = system(vec![0, 0, 1, 2, 2, 2], 3);
        let alg = BaseAlgebra::all_functions(sys.target().clone());
        let m = PullbackModule::new(sys.clone(), alg, vec![one(sys.source())], 1).unwrap();
        assert_eq!(m.dimension(), sys.map().finite_image().len());
    }

    #[test]
    fn single_generator_with_zero_algebra() {
        let sys = system(vec![0, 0, 0], 1);
        let zero = SampledFunction::zero(sys.target().clone());
        let alg = BaseAlgebra::new(sys.target().clone(), vec![zero], 1).unwrap();
        let f = SampledFunction::real(sys.source().clone(), &[3.0, 0.0, 4.0]).unwrap();
        let m = PullbackModule::new(sys, alg, vec![f], 1).unwrap();
        let b = materialize_basis(&m);
        assert_eq!(b.len(), 1);
        let expect = [0.6, 0.0, 0.8];
        for (v, e) in b[0].real_parts().iter().zip(expect) {
            assert!((v - e).abs() < 1e-15);
        }
    }

    #[test]
    fn dependent_generators_lose_rank() {
        let sys = system(vec![0, 0, 0, 0], 1);
        let alg = BaseAlgebra::constants(sys.target().clone());
        let f = SampledFunction::real(sys.source().clone(), &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let g = SampledFunction::real(sys.source().clone(), &[0.0, 1.0, 0.0, 1.0]).unwrap();
        let h = f.plus(&g.scaled(Complex64::new(2.0, 0.0))).unwrap();
        let m = PullbackModule::new(sys, alg, vec![f, g, h], 2).unwrap();
        assert_eq!(m.dimension(), 2);
    }

    #[test]
    fn all_zero_generators_warn() {
        let sys = system(vec![0, 0], 1);
        let alg = BaseAlgebra::constants(sys.target().clone());
        let z = SampledFunction::zero(sys.source().clone());
        let m = PullbackModule::new(sys, alg, vec![z], 1).unwrap();
        assert_eq!(m.dimension(), 0);
        assert_eq!(m.warnings().len(), 1);
    }

    #[test]
    fn conjugation_examples() {
        let sys = system(vec![0, 0, 1], 2);
        let alg = BaseAlgebra::all_functions(sys.target().clone());
        let real = SampledFunction::real(sys.source().clone(), &[1.0, -2.0, 0.5]).unwrap();
        let m = PullbackModule::new(sys.clone(), alg.clone(), vec![real], 1).unwrap();
        assert!(conjugate_closure_check(&m).closed);

        let i1 = SampledFunction::constant(sys.source().clone(), Complex64::new(0.0, 1.0));
        let m = PullbackModule::new(sys.clone(), alg.clone(), vec![i1], 1).unwrap();
        assert!(conjugate_closure_check(&m).closed);

        let f = SampledFunction::new(
            sys.source().clone(),
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(1.0, 0.0),
            ],
        )
        .unwrap();
        let m = PullbackModule::new(sys, alg, vec![f], 1).unwrap();
        let rep = conjugate_closure_check(&m);
        assert!(!rep.closed);
        assert!(rep.worst_residual > 0.1);
    }

    #[test]
    fn degree_bounded_stability_holds() {
        let sys = system(vec![0, 0, 1, 1, 2, 3, 3], 4);
        let y = sys.target().clone();
        let g1 = SampledFunction::real(y.clone(), &[0.3, -0.7, 1.1, 0.2]).unwrap();
        let g2 = SampledFunction::new(
            y.clone(),
            vec![
                Complex64::new(0.1, 0.4),
                Complex64::new(-0.5, 0.0),
                Complex64::new(0.9, -0.2),
                Complex64::new(0.0, 0.3),
            ],
        )
        .unwrap();
        let alg = BaseAlgebra::new(y, vec![g1, g2], 3).unwrap();
        let m0 =
            SampledFunction::real(sys.source().clone(), &[1.0, 0.5, -0.3, 0.8, 1.2, 0.1, -0.6])
                .unwrap();
        let m = PullbackModule::new(sys, alg, vec![m0], 2).unwrap();
        assert!(m.stability_residual() <= 1e-9);
        assert!(conjugate_closure_check(&m).closed);
    }

    #[test]
    fn basis_is_reproducible() {
        let sys = system(vec![0, 1, 1, 2], 3);
        let y = sys.target().clone();
        let g = SampledFunction::real(y.clone(), &[0.2, 0.9, -0.4]).unwrap();
        let alg = BaseAlgebra::new(y, vec![g], 3).unwrap();
        let m0 = SampledFunction::real(sys.source().clone(), &[1.0, 2.0, -1.0, 0.5]).unwrap();
        let a = PullbackModule::new(sys.clone(), alg.clone(), vec![m0.clone()], 2).unwrap();
        let b = PullbackModule::new(sys, alg, vec![m0], 2).unwrap();
        for (u, v) in a.basis().iter().zip(b.basis()) {
            for (p, q) in u.values().iter().zip(v.values()) {
                assert_eq!(p.re.to_bits(), q.re.to_bits());
                assert_eq!(p.im.to_bits(), q.im.to_bits());
            }
        }
    }
}
