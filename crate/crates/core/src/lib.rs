// Validation checks are written as negated comparisons so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod checkpoint;
pub mod data;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod runner;

pub use error::{Error, Result};
pub use linalg::{Matrix, Rng};
