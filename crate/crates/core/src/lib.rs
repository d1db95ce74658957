//! Richardson-extrapolation acceleration for extremum-seeking loops.
//!
//! The crate simulates the loop ODEs on a period-aligned grid ([`dynamics`]),
//! recovers the limit and decay factor from period-shifted samples
//! ([`extraction`]), provides the drift perturbation series and its convergence
//! bounds ([`perturbation`]), and runs declarative scenarios ([`scenarios`]) whose
//! traces can be written as CSV and SVG ([`report`]).

// `!(x > 0.0)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod extraction;
pub mod perturbation;
pub mod report;
pub mod scenarios;

pub use error::{Error, Result};
