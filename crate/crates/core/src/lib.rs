//! Desk-scale laboratory for an explicit entire curve in a ruled surface over
//! an elliptic curve: perturbed Gaussian-lattice zero loci, the genus-2
//! canonical product they define, the pulled-back Kähler density, and the
//! area, order-function and mass-profile integrals built on top of them.
//!
//! The crate is `no_std` (with `alloc`) when built without the default
//! features; enable `libm` in that case for the float intrinsics.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is how NaN gets rejected along with the nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(not(any(feature = "std", feature = "libm")))]
compile_error!("curvelab-core needs either the `std` or the `libm` feature for float math");

pub mod canonical_product;
pub mod current_profiler;
mod error;
pub mod lattice_locus;
pub mod math;
pub mod nevanlinna_calculus;
pub mod par;
pub mod sampling;
pub mod surface_geometry;
pub mod torus_examples;

pub use error::{Error, Result};
pub use math::C64;
