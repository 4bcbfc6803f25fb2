//! Gain-optimal control of average-reward semi-Markov decision processes
//! by optimal nudging: a sequence of cumulative-reward problems whose
//! gain parameters are chosen by minmax geometry in w-l space.

pub mod baselines;
pub mod env;
pub mod geometry;
pub mod nudging;
pub mod record;
pub mod error;
pub mod rng;
pub mod schedule;
pub mod solvers;
pub mod task;

pub use error::{Error, Result};
