//! Learning solvers for stochastic combinatorial optimization problems from
//! observed input-solution pairs.
//!
//! The score of a candidate solution is a nonnegative combination of its
//! objective values under `K` sampled configurations. Weights are fitted with
//! a one-slack structured SVM so the observed solutions win by a margin.

pub mod datagen;
pub mod error;
pub mod framework;
pub mod harness;
pub mod rng;
pub mod sbm;
pub mod ssc;
pub mod ssp;
pub mod trainer;

pub use error::{Result, UscoError};
pub use framework::*;
