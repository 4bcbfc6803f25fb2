//! Outer loops that reduce gain optimization to a sequence of cumulative
//! tasks: estimate the reward bound, pick a gain, solve, shrink the
//! enclosing triangle, repeat.

use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error as ThisError;

use crate::error::{Error, Result};
use crate::geometry::{
    alpha_gain_update, initial_triangle, optimal_gain_update, reduce_triangle_with,
    EnclosingTriangle, GainInterval, ValueMismatch, WlPoint,
};
use crate::record::{RunRecord, Termination};
use crate::solvers::{solve_cumulative, QTable, SolverConfig, SolverResult};
use crate::task::{Policy, SplitTask};

/// How the next gain is chosen inside the current interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainRule {
    /// Minmax update balancing the worst-case uncertainties.
    Optimal,
    /// Fixed fraction of the interval, measured from the lower bound.
    Alpha(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NudgeConfig {
    pub solver: SolverConfig,
    pub rule: GainRule,
    /// Stop once the gain interval is at most this wide.
    pub eps: f64,
    pub max_iters: usize,
    /// Warm-start each solve from the previous table.
    pub transfer: bool,
    /// Stop on the sign-change test.
    pub zero_crossing: bool,
    /// Reward bound; estimated when absent.
    pub d: Option<f64>,
    /// Tolerance of the zero-value test; defaults by backend.
    pub value_tol: Option<f64>,
    /// Handling of values outside the triangle's range; clamps for sampled
    /// backends and rejects for dynamic programming unless set.
    pub mismatch: Option<ValueMismatch>,
}

impl NudgeConfig {
    pub fn new(solver: SolverConfig, rule: GainRule, eps: f64, max_iters: usize) -> Self {
        Self {
            solver,
            rule,
            eps,
            max_iters,
            transfer: false,
            zero_crossing: true,
            d: None,
            value_tol: None,
            mismatch: None,
        }
    }

    pub fn with_transfer(mut self, transfer: bool) -> Self {
        self.transfer = transfer;
        self
    }

    pub fn with_zero_crossing(mut self, on: bool) -> Self {
        self.zero_crossing = on;
        self
    }

    pub fn with_d(mut self, d: f64) -> Self {
        self.d = Some(d);
        self
    }

    pub fn with_mismatch(mut self, mismatch: ValueMismatch) -> Self {
        self.mismatch = Some(mismatch);
        self
    }

    /// `1e-9` for dynamic programming, `1e-3 * d` for sampled backends.
    pub fn value_tol_for(&self, d: f64) -> f64 {
        self.value_tol.unwrap_or(if self.solver.backend.is_sampled() {
            1e-3 * d
        } else {
            1e-9
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if !(self.eps > 0.0) {
            return Err(Error::InvalidArgument(format!("eps {} must be positive", self.eps)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be positive".into()));
        }
        if let GainRule::Alpha(a) = self.rule {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::InvalidArgument(format!("alpha {a} outside (0, 1]")));
            }
        }
        if let Some(d) = self.d {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::InvalidArgument(format!("reward bound {d} must be positive")));
            }
        }
        Ok(())
    }
}

/// Outcome of the reward-bound estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundEstimate {
    pub d: f64,
    pub samples: u64,
    pub sweeps: u64,
}

/// Best cumulative value of the initial state with rewards `|r|` and zero
/// gain. Bounds the value of every policy.
pub fn estimate_d<R: Rng + ?Sized>(
    split: &SplitTask,
    cfg: &SolverConfig,
    rng: &mut R,
) -> Result<BoundEstimate> {
    let abs = split.map_rewards(f64::abs);
    let res = solve_cumulative(&abs, 0.0, cfg, rng, None)?;
    if !res.converged {
        return Err(Error::NotConverged);
    }
    if !(res.v_si > 0.0 && res.v_si.is_finite()) {
        return Err(Error::InvalidTask(format!(
            "reward bound estimate {} is not positive",
            res.v_si
        )));
    }
    Ok(BoundEstimate {
        d: res.v_si,
        samples: res.samples_used,
        sweeps: res.sweeps_used,
    })
}

/// True iff both records carry the same policy and strictly opposite
/// nonzero values of the initial state.
pub fn zero_crossing_check(prev: &RunRecord, curr: &RunRecord) -> bool {
    prev.policy == curr.policy
        && prev.v_star != 0.0
        && curr.v_star != 0.0
        && (prev.v_star > 0.0) != (curr.v_star > 0.0)
}

/// Gain where the common policy's nudged value, linear in the gain, is zero.
fn crossing_gain(prev: &RunRecord, curr: &RunRecord) -> f64 {
    let slope = (curr.v_star - prev.v_star) / (curr.rho - prev.rho);
    curr.rho - curr.v_star / slope
}

#[derive(Debug, Clone, PartialEq)]
pub struct NudgeRun {
    pub d: f64,
    /// Work spent estimating `d` and checking the gain sign.
    pub setup_samples: u64,
    pub setup_sweeps: u64,
    /// Initial triangle followed by one triangle per iteration.
    pub triangles: Vec<EnclosingTriangle>,
    pub records: Vec<RunRecord>,
    pub termination: Option<Termination>,
    /// Final gain estimate.
    pub gain: f64,
}

impl NudgeRun {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn interval(&self) -> GainInterval {
        self.triangles
            .last()
            .map(EnclosingTriangle::interval)
            .unwrap_or(GainInterval { lo: 0.0, hi: self.d })
    }

    /// Policy returned by the last solve.
    pub fn policy(&self) -> Option<&Policy> {
        self.records.last().map(|r| &r.policy)
    }

    pub fn iteration_samples(&self) -> u64 {
        self.records.iter().map(|r| r.samples).sum()
    }

    pub fn iteration_sweeps(&self) -> u64 {
        self.records.iter().map(|r| r.sweeps).sum()
    }
}

/// A failed run with everything completed before the failure.
#[derive(Debug, Clone, ThisError)]
#[error("nudging stopped after {} iterations: {source}", partial.records.len())]
pub struct NudgeFailure {
    pub source: Error,
    pub partial: Box<NudgeRun>,
}

impl NudgeFailure {
    fn new(source: Error, partial: NudgeRun) -> Self {
        Self {
            source,
            partial: Box::new(partial),
        }
    }
}

impl From<Error> for NudgeFailure {
    fn from(source: Error) -> Self {
        Self::new(
            source,
            NudgeRun {
                d: f64::NAN,
                setup_samples: 0,
                setup_sweeps: 0,
                triangles: Vec::new(),
                records: Vec::new(),
                termination: None,
                gain: f64::NAN,
            },
        )
    }
}

pub type NudgeResult = std::result::Result<NudgeRun, NudgeFailure>;

/// Runs the nudging loop with the configured gain rule.
///
/// With a dynamic-programming backend the best value at zero gain is
/// checked first; a negative value means no policy has positive gain.
pub fn nudging_run<R: Rng + ?Sized>(split: &SplitTask, cfg: &NudgeConfig, rng: &mut R) -> NudgeResult {
    cfg.validate()?;
    let (d, mut setup_samples, mut setup_sweeps) = match cfg.d {
        Some(d) => (d, 0, 0),
        None => {
            let est = estimate_d(split, &cfg.solver, rng)?;
            (est.d, est.samples, est.sweeps)
        }
    };
    let value_tol = cfg.value_tol_for(d);
    let sampled = cfg.solver.backend.is_sampled();
    if !sampled {
        let res = solve_cumulative(split, 0.0, &cfg.solver, rng, None)?;
        setup_samples += res.samples_used;
        setup_sweeps += res.sweeps_used;
        if !res.converged {
            return Err(Error::NotConverged.into());
        }
        if res.v_si < -value_tol {
            return Err(Error::NoPositiveGain.into());
        }
    }
    let mismatch = cfg.mismatch.unwrap_or(if sampled {
        ValueMismatch::Clamp
    } else {
        ValueMismatch::Reject
    });

    let mut tri = initial_triangle(d)?;
    let mut run = NudgeRun {
        d,
        setup_samples,
        setup_sweeps,
        triangles: vec![tri],
        records: Vec::new(),
        termination: None,
        gain: tri.interval().midpoint(),
    };
    let mut table: Option<QTable> = None;

    for iter in 1..=cfg.max_iters {
        if tri.interval().width() <= cfg.eps || tri.is_degenerate(d) {
            run.termination = Some(Termination::IntervalBelowEps);
            break;
        }
        let rho = match cfg.rule {
            GainRule::Optimal => optimal_gain_update(&tri),
            GainRule::Alpha(a) => alpha_gain_update(&tri, a),
        };
        let rho = match rho {
            Ok(r) => r,
            Err(e) => return Err(NudgeFailure::new(e, run)),
        };
        let warm = if cfg.transfer { table.as_ref() } else { None };
        let res: SolverResult = match solve_cumulative(split, rho, &cfg.solver, rng, warm) {
            Ok(r) => r,
            Err(e) => return Err(NudgeFailure::new(e, run)),
        };
        let mut record = RunRecord {
            iter,
            rho,
            v_star: res.v_si,
            policy: res.policy.clone(),
            samples: res.samples_used,
            sweeps: res.sweeps_used,
            interval: None,
        };
        if !res.converged {
            run.records.push(record);
            return Err(NudgeFailure::new(Error::NotConverged, run));
        }
        table = Some(res.q_table);

        if res.v_si.abs() <= value_tol {
            tri = collapse(&tri, rho);
            record.interval = Some(GainInterval { lo: rho, hi: rho });
            run.gain = rho;
            run.push(tri, record, Termination::ValueZero);
            return Ok(run);
        }
        if cfg.zero_crossing {
            if let Some(prev) = run.records.last() {
                if zero_crossing_check(prev, &record) {
                    let iv = tri.interval();
                    let gain = crossing_gain(prev, &record).clamp(iv.lo, iv.hi);
                    tri = collapse(&tri, gain);
                    record.interval = Some(GainInterval { lo: gain, hi: gain });
                    run.gain = gain;
                    run.push(tri, record, Termination::ZeroCrossing);
                    return Ok(run);
                }
            }
        }

        tri = match reduce_triangle_with(&tri, rho, res.v_si, d, mismatch) {
            Ok(t) => t,
            Err(e) => {
                run.records.push(record);
                return Err(NudgeFailure::new(e, run));
            }
        };
        record.interval = Some(tri.interval());
        run.gain = tri.interval().midpoint();
        run.triangles.push(tri);
        run.records.push(record);
    }
    if run.termination.is_none() {
        let done = tri.interval().width() <= cfg.eps || tri.is_degenerate(d);
        run.termination = Some(if done {
            Termination::IntervalBelowEps
        } else {
            Termination::Budget
        });
    }
    Ok(run)
}

impl NudgeRun {
    fn push(&mut self, tri: EnclosingTriangle, record: RunRecord, term: Termination) {
        self.triangles.push(tri);
        self.records.push(record);
        self.termination = Some(term);
    }
}

/// The point on the zero-value line of gain `rho` inside the triangle,
/// taken where that line crosses AC.
fn collapse(tri: &EnclosingTriangle, rho: f64) -> EnclosingTriangle {
    let (a, c) = (tri.a(), tri.c());
    let f = |p: WlPoint| p.w - p.l - rho;
    let (fa, fc) = (f(a), f(c));
    let t = if fa == fc { 0.0 } else { (fa / (fa - fc)).clamp(0.0, 1.0) };
    let p = a.lerp(c, t);
    // keep the point on the zero line even when AC misses it
    let shift = 0.5 * f(p);
    EnclosingTriangle::point(WlPoint::new(p.w - shift, p.l + shift))
}

/// Worst-case solver calls for a fixed-fraction rule to shrink an interval
/// of width `d` to `eps`: `ceil(log(d/eps) / -log(max(alpha, 1-alpha))) + 1`.
/// The minmax rule obeys the bound for `alpha = 0.5`.
pub fn iteration_bound(d: f64, eps: f64, alpha: f64) -> usize {
    let shrink = alpha.max(1.0 - alpha);
    if shrink >= 1.0 {
        return usize::MAX;
    }
    let n = ((d / eps).ln() / -shrink.ln() - 1e-9).ceil().max(0.0);
    n as usize + 1
}

/// Minmax nudging.
pub fn optimal_nudging_run<R: Rng + ?Sized>(
    split: &SplitTask,
    solver: &SolverConfig,
    eps: f64,
    max_iters: usize,
    transfer: bool,
    rng: &mut R,
) -> NudgeResult {
    let cfg = NudgeConfig::new(solver.clone(), GainRule::Optimal, eps, max_iters).with_transfer(transfer);
    nudging_run(split, &cfg, rng)
}

/// Nudging at a fixed fraction `alpha` of the gain interval.
pub fn alpha_nudging_run<R: Rng + ?Sized>(
    split: &SplitTask,
    solver: &SolverConfig,
    alpha: f64,
    eps: f64,
    max_iters: usize,
    rng: &mut R,
) -> NudgeResult {
    let cfg = NudgeConfig::new(solver.clone(), GainRule::Alpha(alpha), eps, max_iters);
    nudging_run(split, &cfg, rng)
}

pub const TRIANGLE_TRACE_HEADER: &str = "iter,wA,lA,wB,lB,wC,lC,P,Q,rho,v_star";

/// One row per triangle; row 0 is the initial triangle with empty gain and
/// value columns. `P` and `Q` are the gain interval bounds.
pub fn triangle_trace_csv(run: &NudgeRun) -> String {
    let mut out = String::new();
    out.push_str(TRIANGLE_TRACE_HEADER);
    out.push('\n');
    for (i, tri) in run.triangles.iter().enumerate() {
        let (a, b, c) = (tri.a(), tri.b(), tri.c());
        let iv = tri.interval();
        let (rho, v) = match i.checked_sub(1).and_then(|j| run.records.get(j)) {
            Some(r) => (r.rho.to_string(), r.v_star.to_string()),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(
            out,
            "{i},{},{},{},{},{},{},{},{},{rho},{v}",
            a.w, a.l, b.w, b.l, c.w, c.l, iv.lo, iv.hi
        );
    }
    out
}
