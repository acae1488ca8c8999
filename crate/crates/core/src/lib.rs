//! Numerical laboratory for Belinski-Zakharov spacetimes.
//!
//! A metric depending on `(t, x)` only, with a 2x2 block of determinant
//! `alpha^2`, reduces the vacuum field equations to a 1+1 quasilinear wave
//! system for `(Lambda, phi)`, a linear wave equation for `alpha` and a sourced
//! wave equation for `ln f`. This crate evolves that system, evaluates
//! closed-form backgrounds and solitons, and computes energy, momentum, virial
//! and decay diagnostics.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alpha;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod exact;
pub mod fields;
pub mod profile;
pub mod quadrature;
pub mod scenario;
pub mod special;
pub mod stencil;

pub use error::{BzError, Result};
