//! Bergman kernel densities on hyperbolic surfaces.
//!
//! The density ρ_k of the k-th power of a positive line bundle is computed two
//! ways: by summing an orthogonal monomial basis on the model cylinder and cusp
//! ([`modesum`]), and by summing over geodesic loops at the point ([`trace`]),
//! with the loops coming either from closed formulas on the model surfaces or
//! from orbit enumeration of a Fuchsian group ([`fuchsian`], [`loopgeo`]).
//!
//! Plane geometry lives in [`hypgeo`]; [`quad`] is the shared Gauss–Legendre
//! engine.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fuchsian;
pub mod hypgeo;
pub mod loopgeo;
pub mod modesum;
pub mod quad;
pub mod trace;

pub use error::{Error, Result};
