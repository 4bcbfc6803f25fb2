//! Testbed builders.

pub mod bertsekas;
pub mod queuing;
pub mod random;
pub mod tracking;
