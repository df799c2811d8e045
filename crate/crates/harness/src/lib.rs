//! Experiment driver: configuration, sampling, the end-to-end pipeline and
//! its CSV/JSON artifacts.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod fields;
pub mod report;
pub mod run;
pub mod sampling;
