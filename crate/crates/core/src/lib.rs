//! Monotonicity-preserving finite element schemes for scalar conservation
//! laws.
//!
//! The crate assembles P1/Q1 Galerkin operators on 2D meshes, adds a
//! graph-Laplacian artificial diffusion driven by a shock detector (with a
//! twice-differentiable variant), and solves the resulting nonlinear systems
//! with relaxed Anderson acceleration or Newton's method with line search.
//! A benchmark catalog, error norms and discrete-maximum-principle audits
//! sit on top.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assembly;
pub mod bench;
pub mod cli;
pub mod error;
pub mod io;
pub mod mesh;
pub mod quadrature;
pub mod residual;
pub mod solvers;
pub mod sparse;
pub mod stabilization;
pub mod timeloop;

pub use error::{Error, Result};
