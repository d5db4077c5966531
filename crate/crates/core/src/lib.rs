//! Numerical laboratory for spinor calculus on Spin^c manifolds.

pub mod catalog;
pub mod clifford;
pub mod cylinder;
pub mod emtensor;
pub mod error;
pub mod geometry;
pub mod hypersurface;
pub mod lattice;
pub mod linalg;
pub mod spinc;
pub mod report;
pub mod runner;
pub mod varbounds;

pub use error::{Error, Result};
