//! Dissipaton equation of motion for charged open quantum systems observed
//! from rotating and accelerating frames.

// `!(x > 0.0)` is used on purpose so that NaN fails input checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bath;
pub mod frames;
pub mod hierarchy;
pub mod model;
pub mod operators;
pub mod observables;
pub mod oracles;
