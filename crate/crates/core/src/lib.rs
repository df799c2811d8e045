//! Finite-element optimality systems for distributed optimal control with
//! affine parameter dependence, plus the projection and multiscale reduced
//! models built from them.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fem;
pub mod fom;
pub mod gmsfem;
pub mod mesh;
pub mod problem;
pub mod quadrature;
pub mod rom;
pub mod sparse;
pub mod system;

pub use error::{CoreError, Result};
