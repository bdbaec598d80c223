//! Distinguishability quantifiers for classical distributions and quantum
//! states, CPTP channel constructions, and seeded property suites that check
//! contractivity, invariance and optimal-pair behaviour numerically.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cdiv;
pub mod channels;
pub mod error;
pub mod harness;
pub mod matcore;
pub mod qdiv;
pub mod random;
pub mod states;

pub use error::{Error, Result};
