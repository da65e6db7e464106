//! Linearized free-boundary incompressible Euler on the unit disk.

pub mod background;
pub mod calculus;
pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod evolution;
pub mod families;
pub mod fields;
pub mod grid;
pub mod lift;
pub mod operators;
pub mod profiles;
pub mod projection;

pub use error::{Error, Result};
pub use fields::{OneForm, ScalarField, SymmetricTensorField, Tensor, TwoForm, VectorField};
pub use grid::{build_grid, Grid, Location};
