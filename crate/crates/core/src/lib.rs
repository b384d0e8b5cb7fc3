//! Skeletal multiscale solver for rough-coefficient elliptic problems.
//!
//! The library discretizes `div q = f`, `A^{-1} q + grad u = 0` on the unit
//! square with a linear LDG-H (hybridizable discontinuous Galerkin) method,
//! statically condensed onto the mesh skeleton, and builds a coarse multiscale
//! space on the skeleton by correcting coarse trace functions with localized
//! fine-scale saddle-point solves (localized orthogonal decomposition).
//!
//! Modules follow the pipeline:
//! - [`mesh`]: nested uniform triangulations of the unit square, faces,
//!   patches.
//! - [`coefficient`]: piecewise-constant diffusion fields on the epsilon grid.
//! - [`hdg`]: per-element local solvers, static condensation, skeletal
//!   products and norms, fine reference solves.
//! - [`transfer`]: injection and projection operators between the non-nested
//!   coarse and fine skeletal spaces.
//! - [`corrector`]: element corrector saddle problems and the multiscale
//!   basis.
//! - [`msolve`]: the coarse Galerkin solve, error reports, and convergence
//!   studies.
//!
//! All floating-point kernels are generic over the scalar type via [`Real`];
//! concrete `f64` aliases are exported at the crate root.

pub mod coefficient;
pub mod corrector;
pub mod diagnostics;
pub mod error;
pub mod hdg;
pub mod mesh;
pub mod msolve;
pub mod quad;
pub mod solver;
pub mod sparse;
pub mod transfer;

pub use error::Error;

use num_traits::{FromPrimitive, ToPrimitive};

/// Scalar type for all floating-point computation.
///
/// `f32` and `f64` implement it. Integral mesh data stays `usize`; geometry
/// is dyadic and converts exactly into either scalar.
pub trait Real:
    nalgebra::RealField + FromPrimitive + ToPrimitive + Copy + Default + std::iter::Sum + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal or geometric quantity into the working scalar.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("finite literal")
}

/// Result alias used across the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Default scalar for the command-line pipeline and the acceptance suite.
pub type DefaultReal = f64;

/// Coefficient field over the default scalar.
pub type Coefficient = coefficient::CoefficientField<DefaultReal>;
/// Sparse skeletal operator over the default scalar.
pub type Operator = sparse::SkeletalOperator<DefaultReal>;
/// Condensed fine-level system over the default scalar.
pub type FineSystem = hdg::FineSystem<DefaultReal>;
