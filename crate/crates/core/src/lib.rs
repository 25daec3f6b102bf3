//! Numerical harmonic analysis on real rank-one hyperbolic spaces.

// `!(x > 0.0)` rejects NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod families;
pub mod lorentz;
pub mod maximal;
pub mod measure;
pub mod model;
pub mod quad;
pub mod report;
pub mod transforms;

pub use error::{Error, Result};
