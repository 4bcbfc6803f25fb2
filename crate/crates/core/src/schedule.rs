//! Learning-rate schedules.

use crate::error::{Error, Result};

/// Step-size schedule indexed by a step counter `t` (from zero) or by the
/// visit count of the updated pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateSchedule {
    Constant(f64),
    /// `1 / (1 + t)^exponent`, with exponent in `(0.5, 1]`.
    Power { exponent: f64 },
    /// Search-then-converge: `alpha0 / (1 + t^2 / (tau + t))`.
    Dcm { alpha0: f64, tau: f64 },
    /// `1 / (1 + visits)` of the updated state-action pair.
    Individual,
}

impl RateSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RateSchedule::Constant(a) => a > 0.0 && a <= 1.0,
            RateSchedule::Power { exponent } => exponent > 0.5 && exponent <= 1.0,
            RateSchedule::Dcm { alpha0, tau } => alpha0 > 0.0 && alpha0 <= 1.0 && tau > 0.0,
            RateSchedule::Individual => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid rate schedule {self:?}")))
        }
    }

    /// Rate for step `t`; `visits` is used by [`RateSchedule::Individual`]
    /// and defaults to `t` when absent.
    pub fn eval(&self, t: u64, visits: Option<u64>) -> f64 {
        let tf = t as f64;
        match *self {
            RateSchedule::Constant(a) => a,
            RateSchedule::Power { exponent } => (1.0 + tf).powf(-exponent),
            RateSchedule::Dcm { alpha0, tau } => alpha0 / (1.0 + tf * tf / (tau + tf)),
            RateSchedule::Individual => 1.0 / (1.0 + visits.unwrap_or(t) as f64),
        }
    }

    /// Whether the rate depends on per-pair visit counts.
    pub fn uses_visits(&self) -> bool {
        matches!(self, RateSchedule::Individual)
    }
}
