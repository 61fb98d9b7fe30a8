//! Generalization-bound toolkit for multiple kernel learning on mixed
//! Markov data.
//!
//! The crate computes the chain quantities that enter the bounds (stationary
//! laws, spectral and pseudo spectral gaps, mixing times, τ_min), aggregates
//! them over a pool of chains, simulates interleaved labeled data from such a
//! pool, trains an L_q-constrained multiple-kernel classifier, evaluates every
//! bound formula, and checks each inequality by Monte Carlo.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod chain;
pub mod data;
pub mod desk;
pub mod error;
pub mod kernel;
pub mod learner;
pub mod par;
pub mod pool;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
