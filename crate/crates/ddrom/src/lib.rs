//! Data-driven, L2-optimal reduced-order models in parameter-separable form.
//!
//! A model is a tuple of small matrices `(Ã_q, B̃_p, C̃_k)` with scalar
//! weights, evaluated as
//!
//! ```text
//! (Σ_q Q̃_a^q(μ) Ã_q) x̂(μ) = Σ_p Q̃_u^p(μ) B̃_p,    ŷ(μ) = Σ_k Q̃_l^k(μ) C̃_k x̂(μ).
//! ```
//!
//! [`fit`](fit::fit) adjusts the matrices to minimize the discrete L2 error
//! between `ŷ` and measured outputs `y`. Everything in this crate works from
//! `(μ, y)` pairs and an initial matrix tuple; nothing here can reach the
//! full-order model that produced the data.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bfgs;
pub mod error;
pub mod fit;
pub mod io;
pub mod matrices;
pub mod model;
pub mod objective;
pub mod scalar;
pub mod training;

pub use error::{DdromError, Result};
pub use fit::{fit, FitOptions, FitReport, IterationRecord, StopReason};
pub use matrices::{BlockLayout, DdromMatrices, FullGradient, Parameterization, SaddleBlocks};
pub use model::{Evaluation, DEFAULT_FEASIBILITY_CAP};
pub use objective::{gradients, objective, outputs, value_and_gradient, ObjectiveValue};
pub use scalar::ScalarFn;
pub use training::{OutputSample, TrainingSet};
