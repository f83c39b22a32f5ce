//! Spectral optimization of Schrödinger operators `-Δ + μ` on truncated grids.
//!
//! The measure `μ` is a [`GeneralizedPotential`]: a nonnegative finite field
//! together with a mask of nodes where it is `+∞`. On top of the discrete
//! operator the crate computes torsion functions, low eigenpairs, γ-distances
//! between measures, and runs penalized optimizers for `λ_k`.

// Negated comparisons reject NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gamma;
pub mod grid;
pub mod optimize;
pub mod spectrum;
pub mod torsion;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{build_grid, GeneralizedPotential, GridSpec, Operator, ScalarField};
