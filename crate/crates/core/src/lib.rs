//! Numerical laboratory for degenerate high-order parabolic equations
//! `u_t = (-1)^{m-1} ∇·(f^n(|u|) ∇Δ^{m-1} u)` on a periodic box.
//!
//! The crate provides the polyharmonic heat kernel and its spectrum, a
//! pseudospectral solver for the uniformly parabolic regularizations, energy
//! monitors, and homotopy sweeps toward the polyharmonic heat equation.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod degeneracy;
pub mod error;
pub mod gridfield;
pub mod homotopy;
pub mod kernel;
pub mod runner;
pub mod solver;
pub mod spectral_theory;

pub use error::{Error, Result};
pub use gridfield::{Field, GridSpec, VectorField};
