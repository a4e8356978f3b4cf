// `!(x > 0.0)` guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod bounds;
pub mod exec;
pub mod geometry;
pub mod harness;
pub mod tensor;
pub mod univariate;

pub use error::{Error, Result};
