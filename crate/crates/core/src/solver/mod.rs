//! Linear solvers for the condensed skeletal systems.
//!
//! The direct path is a sparse Cholesky factorization with a geometric
//! nested-dissection ordering; the meshes are structured, so recursive
//! coordinate bisection gives near-optimal separators without an external
//! ordering package. A Jacobi-preconditioned conjugate gradient serves as the
//! contracted fallback and as an independent cross-check, and saddle-point
//! systems are solved through the Schur complement of their constraint block.

mod cg;
mod cholesky;
mod saddle;

pub use cg::conjugate_gradient;
pub use cholesky::{nested_dissection, SparseCholesky};
pub use saddle::SchurSaddle;
