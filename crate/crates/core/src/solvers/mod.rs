//! Cumulative-reward solvers for a split task under a fixed gain `rho`:
//! every transition pays `r - rho * k`, the terminal state is worth zero.

pub(crate) mod dp;
mod qlearning;

use rand::Rng;

use crate::error::{Error, Result};
use crate::schedule::RateSchedule;
use crate::task::{Policy, SplitTask};

pub use dp::dp_solve;
pub use qlearning::q_learning_solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    QLearning,
    DpJacobi,
    DpGaussSeidel,
}

impl Backend {
    pub fn is_sampled(self) -> bool {
        matches!(self, Backend::QLearning)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub backend: Backend,
    /// Q-learning step sizes.
    pub alpha: RateSchedule,
    /// Exploration probability of the epsilon-greedy behaviour policy.
    pub epsilon: f64,
    /// Samples for Q-learning, sweeps for dynamic programming.
    pub budget: u64,
    /// Q-learning jumps to a uniformly drawn state every this many steps.
    pub reset_period: Option<u64>,
    pub value_init: f64,
    /// Dynamic programming stops once no value moves by more than this
    /// times the largest value magnitude (at least one).
    pub convergence_tol: f64,
    /// Record one trace row per sweep.
    pub trace: bool,
}

impl SolverConfig {
    pub fn dp(backend: Backend, convergence_tol: f64, max_sweeps: u64) -> Self {
        Self {
            backend,
            alpha: RateSchedule::Constant(1.0),
            epsilon: 0.0,
            budget: max_sweeps,
            reset_period: None,
            value_init: 0.0,
            convergence_tol,
            trace: false,
        }
    }

    pub fn q_learning(alpha: RateSchedule, epsilon: f64, samples: u64) -> Self {
        Self {
            backend: Backend::QLearning,
            alpha,
            epsilon,
            budget: samples,
            reset_period: None,
            value_init: 0.0,
            convergence_tol: 1e-9,
            trace: false,
        }
    }

    pub fn with_reset_period(mut self, period: u64) -> Self {
        self.reset_period = Some(period);
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::InvalidArgument("solver budget must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidArgument(format!(
                "exploration probability {} outside [0, 1]",
                self.epsilon
            )));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::InvalidArgument("convergence tolerance must be positive".into()));
        }
        if self.reset_period == Some(0) {
            return Err(Error::InvalidArgument("reset period must be positive".into()));
        }
        if self.backend.is_sampled() {
            self.alpha.validate()?;
        }
        Ok(())
    }
}

/// Action values per state; the terminal row holds a single zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    values: Vec<Vec<f64>>,
}

impl QTable {
    pub fn new(split: &SplitTask, init: f64) -> Self {
        let values = (0..split.n_states())
            .map(|s| {
                let fill = if s == split.terminal() { 0.0 } else { init };
                vec![fill; split.task().n_actions(s)]
            })
            .collect();
        Self { values }
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s]
    }

    pub fn row_mut(&mut self, s: usize) -> &mut [f64] {
        &mut self.values[s]
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s][a]
    }

    pub fn max(&self, s: usize) -> f64 {
        self.values[s].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// First action attaining the row maximum.
    pub fn greedy(&self, s: usize) -> usize {
        argmax(&self.values[s])
    }

    pub fn greedy_policy(&self) -> Policy {
        Policy::new((0..self.values.len()).map(|s| self.greedy(s)).collect())
    }

    pub fn matches(&self, split: &SplitTask) -> bool {
        self.values.len() == split.n_states()
            && self
                .values
                .iter()
                .enumerate()
                .all(|(s, row)| row.len() == split.task().n_actions(s))
    }
}

/// Index of the first maximum.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = i;
        }
    }
    best
}

/// With probability `epsilon` a uniformly random action, otherwise the
/// first maximizing one.
pub fn epsilon_greedy_action<R: Rng + ?Sized>(row: &[f64], epsilon: f64, rng: &mut R) -> usize {
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        rng.gen_range(0..row.len())
    } else {
        argmax(row)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub sweep: u64,
    pub max_delta: f64,
    pub v_si: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    /// Greedy policy of `q_table`.
    pub policy: Policy,
    /// Estimated optimal nudged value of the initial state.
    pub v_si: f64,
    pub q_table: QTable,
    pub samples_used: u64,
    pub sweeps_used: u64,
    /// False when dynamic programming ran out of sweeps.
    pub converged: bool,
    pub trace: Vec<SweepRecord>,
}

/// Solves the cumulative task with per-step reward `r - rho * k`.
pub fn solve_cumulative<R: Rng + ?Sized>(
    split: &SplitTask,
    rho: f64,
    cfg: &SolverConfig,
    rng: &mut R,
    warm_start: Option<&QTable>,
) -> Result<SolverResult> {
    cfg.validate()?;
    if let Some(q) = warm_start {
        if !q.matches(split) {
            return Err(Error::InvalidArgument("warm-start table shape mismatch".into()));
        }
    }
    match cfg.backend {
        Backend::QLearning => Ok(q_learning_solve(split, rho, cfg, rng, warm_start)),
        Backend::DpJacobi | Backend::DpGaussSeidel => Ok(dp_solve(split, rho, cfg, warm_start)),
    }
}

pub(crate) fn nudged_q_values(split: &SplitTask, rho: f64, h: &[f64]) -> QTable {
    let task = split.task();
    let mut q = QTable::new(split, 0.0);
    for s in split.live_states() {
        for (a, slot) in q.row_mut(s).iter_mut().enumerate() {
            *slot = task
                .transitions(s, a)
                .iter()
                .map(|t| t.prob * (t.reward - rho * t.cost + h[t.next]))
                .sum();
        }
    }
    q
}
