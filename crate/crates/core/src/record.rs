//! Per-iteration run records shared by nudging and the baselines, and
//! their CSV form.

use std::fmt::{self, Write as _};

use crate::geometry::GainInterval;
use crate::task::Policy;

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The nudged value of the initial state was zero within tolerance.
    ValueZero,
    /// The same policy was optimal on both sides of a sign change.
    ZeroCrossing,
    /// The iteration or sample budget ran out.
    Budget,
    /// The gain interval became narrower than the target precision.
    IntervalBelowEps,
    /// The gain estimate left the guard band.
    Diverged,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::ValueZero => "value_zero",
            Termination::ZeroCrossing => "zero_crossing",
            Termination::Budget => "budget",
            Termination::IntervalBelowEps => "interval_below_eps",
            Termination::Diverged => "diverged",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One row of a run log.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub iter: usize,
    pub rho: f64,
    pub v_star: f64,
    pub policy: Policy,
    /// Samples consumed by this iteration.
    pub samples: u64,
    /// Dynamic-programming sweeps consumed by this iteration.
    pub sweeps: u64,
    /// Gain interval after the iteration; none for baselines.
    pub interval: Option<GainInterval>,
}

impl RunRecord {
    /// Work in the backend's own unit.
    pub fn work(&self) -> u64 {
        self.samples + self.sweeps
    }
}

pub const RUN_LOG_HEADER: &str = "iter,rho,v_star,P,Q,samples,termination";

/// Writes the run log. `P` and `Q` hold the gain interval bounds, `samples`
/// the per-iteration work (samples or sweeps) and `termination` is filled
/// on the last row only.
pub fn run_log_csv(records: &[RunRecord], termination: Option<Termination>) -> String {
    let mut out = String::new();
    out.push_str(RUN_LOG_HEADER);
    out.push('\n');
    for (i, r) in records.iter().enumerate() {
        let (p, q) = match r.interval {
            Some(iv) => (iv.lo.to_string(), iv.hi.to_string()),
            None => (String::new(), String::new()),
        };
        let term = match termination {
            Some(t) if i + 1 == records.len() => t.as_str(),
            _ => "",
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.iter,
            r.rho,
            r.v_star,
            p,
            q,
            r.work(),
            term
        );
    }
    out
}
