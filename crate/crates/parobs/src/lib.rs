//! Numerical toolkit for the parabolic obstacle problem
//! `Δu - ∂_t u = f·χ_{u>0}`, `u ≥ 0`, studied backward from its space-time
//! vertex with Gaussian-weighted integrals.
//!
//! The crate provides, in dependency order:
//!
//! - [`core_grid`]: space-time grids, scalar fields (closed-form or
//!   gridded), backward-Gaussian measures, exact moment oracles, and the
//!   strip quadrature every weighted integral goes through;
//! - [`obstacle_solver`]: an implicit-Euler / projected-SOR solver for the
//!   discrete obstacle problem, free-boundary extraction, and quadratic
//!   growth / nondegeneracy diagnostics;
//! - [`weiss`]: the Weiss-type energy, its almost-monotone correction, the
//!   calibrated classification thresholds, blow-up sequences and vertex
//!   classification;
//! - [`singular`]: the space of normalized 2-homogeneous caloric profiles,
//!   Gaussian least-squares projection onto it, monotonicity scans at
//!   singular vertices, stratification and tangent-plane diagnostics;
//! - [`modulus`]: integral moduli of continuity of the forcing, Dini-type
//!   integrals, and the cylinder-vs-Gaussian modulus comparison;
//! - [`whitney`]: parabolic Whitney cube decompositions, a smooth partition
//!   of unity subordinate to them, jet extension, and compatibility checks.
//!
//! All data-parallel loops run through [`exec`], which makes the rayon and
//! sequential paths bit-identical; the `parallel` cargo feature (default on)
//! selects whether rayon is compiled in at all.

pub mod core_grid;
pub mod error;
pub mod exec;
pub mod expr;
pub mod modulus;
pub mod obstacle_solver;
pub mod report;
pub mod singular;
pub mod sym;
pub mod weiss;
pub mod whitney;

pub use error::{Error, Result};
