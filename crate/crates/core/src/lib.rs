//! Numerical verification toolkit for the one-dimensional compressible
//! Navier–Stokes system with density-degenerate viscosity `μ(ρ) = ρ^α`,
//! pressure `p(ρ) = ρ^γ` and far-field states at `x → ±∞`.
//!
//! The crate simulates the ε-regularized system on a truncated domain,
//! evaluates the quantities the a priori estimates control, and compares
//! them with the closed-form bounds in [`model::TheoryBounds`].

pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod model;
pub mod profiles;
pub mod solver;

pub use error::{Error, Result};
pub use model::{GasModel, TheoryBounds, Viscosity};
