//! Finite SMDPs, the recurrent-state split, exact policy evaluation and
//! brute-force oracles.

mod eval;
pub mod io;
mod model;
mod split;

pub use eval::{dinkelbach_gain, exact_policy_eval, gain_optimal_oracle, nudged_state_values, PolicyEval, ORACLE_LIMIT};
pub use model::{Policy, PolicyIter, TabularSmdp, Transition, PROB_TOL};
pub use split::{bertsekas_split, sample_step, SplitTask};

#[cfg(test)]
mod tests;
