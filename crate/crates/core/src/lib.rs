//! Finite-key bounds for sampling-based entropic uncertainty relations.
//!
//! The crate evaluates classical sampling failure bounds, bounds on the
//! size of the "good word" set `J_q`, and the QRNG and high-dimensional
//! BB84 key rates built on them, together with exact and Monte Carlo
//! oracles for checking the bounds at small sizes.

// Negated comparisons are used on purpose so that NaN fails domain checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod cli;
mod compose;
pub mod entropy;
pub mod error;
pub mod jq;
pub mod qkd;
pub mod qrng;
pub mod sampling;

pub use error::{Error, Result};
