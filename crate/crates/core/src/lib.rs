//! Fiberwise Chebyshev approximation, envelope certificates and dyadic box
//! covers on finite models of proper maps.

pub mod box_cover;
pub mod cheb_lp;
pub mod corpus;
pub mod density;
pub mod error;
pub mod fibered_space;
pub mod function_algebra;
pub mod linalg;
pub mod localization;
pub mod obstruction;
pub mod regular_vector;
pub mod tau_envelope;

pub use error::{Error, Result};
