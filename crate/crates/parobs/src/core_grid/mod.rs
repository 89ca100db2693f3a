//! Grids, fields, Gaussian-weighted measures and their quadrature.
//!
//! Everything downstream — the obstacle solver, the monotonicity
//! diagnostics, the singular-set machinery — works through the types here:
//! [`SpaceTimeGrid`] fixes the discretization, [`ScalarField`] abstracts
//! closed-form and gridded functions behind one evaluation interface,
//! [`MomentOracle`] supplies exact Gaussian moments, and [`integrate_strip`]
//! is the one quadrature routine all weighted integrals go through.

mod field;
mod grid;
mod io;
mod measure;
mod moments;
mod poly;
mod quadrature;

pub use field::{GriddedField, InterpMode, OutsideMode, ScalarField};
pub use grid::SpaceTimeGrid;
pub use io::{
    read_field_json, read_field_text, write_field_json, write_field_text, FieldDocument,
};
pub use measure::{heat_kernel, kernel_normalization, MeasureKind, WeightedMeasure};
pub use moments::{double_factorial_odd, moment_constants, MomentConstants, MomentOracle};
pub use poly::{Poly, Term};
pub use quadrature::{boundary_tail, integrate_strip, StripIntegral, StripQuadrature};
