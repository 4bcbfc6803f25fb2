//! Experiment harness behind the `nudge` binary.

pub mod config;
pub mod experiments;
