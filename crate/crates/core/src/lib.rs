//! Geometric multigrid V-cycle for SPD finite-element systems with pluggable,
//! possibly inexact, coarsest-level solvers.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`]: CSR kernels, dense Cholesky, power-iteration spectral estimates.
//! - [`fem`]: P1 model problems on nested uniform triangulations of the unit square.
//! - [`multigrid`]: symmetric Gauss-Seidel smoothing, the V-cycle recursion and the
//!   drivers that run exact and inexact cycles side by side.
//! - [`krylov`]: conjugate gradients on the coarsest level with residual and
//!   Gauss-Radau error bounds and the stopping rules built on them.
//! - [`analysis`]: matrix-free coarse-error and residual propagation operators and
//!   the norm constants that control how coarse errors reach the finest level.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod fem;
pub mod krylov;
pub mod linalg;
pub mod multigrid;

pub use error::{Error, Result};
