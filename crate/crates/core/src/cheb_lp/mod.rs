//! Chebyshev approximation and envelope feasibility as small dense linear
//! programs.

mod cheb;
mod envelope;
pub mod simplex;

pub(crate) use cheb::cheb_raw;
pub use cheb::{brute_force_cheb_oracle, cheb_best_approx, ChebSolution, FACETS};
pub use envelope::{envelope_feasible, real_span, FeasibilityCertificate, Status, STRICT_SLACK};
pub(crate) use envelope::{min_dominator, ClosureLp, ClosurePair, Dominator};
