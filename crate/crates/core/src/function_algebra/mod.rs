//! Sampled functions, base algebras and pullback modules.

mod function;
mod module;

pub use function::{
    integrate, norms, pullback, restrict_to_fiber, sup_norm, FunctionDocument, NormReport,
    SampledFunction, ValueDoc,
};
pub use module::{
    conjugate_closure_check, materialize_basis, BaseAlgebra, ConjugationReport, ModuleDocument,
    PullbackModule, DEFAULT_DEGREE_A, DEFAULT_DEGREE_M, RANK_CUTOFF, SPAN_TOLERANCE,
};
