// `!(a < b)` is used deliberately throughout so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod belief;
pub mod benchmark;
pub mod error;
pub mod model;
pub mod numerics;
pub mod simulator;
pub mod strategy;
pub mod swing;
pub mod verifier;
pub mod welfare;

pub use error::{Result, SigError};
