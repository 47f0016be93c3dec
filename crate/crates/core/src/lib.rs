//! Mimetic finite-difference operators on staggered grids, with curvilinear
//! extensions, Poisson and acoustic wave solvers, and a convergence harness.

pub mod conservation;
pub mod curvilinear;
pub mod error;
pub mod grid;
pub mod harness;
pub mod mimetic1d;
pub mod mimeticnd;
pub mod poisson;
pub mod sparse;
pub mod wave;

pub use error::{MimeticError, Result};
