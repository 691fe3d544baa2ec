//! Sparse-anchor flow-matching sampler.
//!
//! Early solver steps evaluate the velocity field only on a coarse subset of
//! tokens (anchors) and lift the result to the full grid. At stage
//! boundaries new tokens are activated, guided by a local-variance map of
//! the velocity, and their state is reset to a noise-blended clean estimate
//! so the trajectory stays consistent.
//!
//! See the `examples/` directory for one runnable program per capability.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cost;
pub mod error;
pub mod grid;
pub mod importance;
pub mod interp;
pub mod io;
pub mod rng;
pub mod sampler;
pub mod schedule;
pub mod selftest;
pub mod toy;
pub mod transition;

pub use error::{JitError, Result};
