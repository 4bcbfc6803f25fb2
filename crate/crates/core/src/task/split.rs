use rand::Rng;

use super::model::{TabularSmdp, Transition};
use crate::error::{Error, Result};

/// A task whose recurrent reference state has been split into an initial
/// state (no inbound mass) and an absorbing terminal state.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitTask {
    task: TabularSmdp,
    initial: usize,
    terminal: usize,
}

impl SplitTask {
    /// Wraps an already-split task after checking the split invariants.
    pub fn new(task: TabularSmdp, initial: usize, terminal: usize) -> Result<Self> {
        let n = task.n_states();
        if initial >= n {
            return Err(Error::InvalidState(initial, n));
        }
        if terminal >= n {
            return Err(Error::InvalidState(terminal, n));
        }
        if initial == terminal {
            return Err(Error::InvalidTask(
                "initial and terminal states coincide".into(),
            ));
        }
        for (s, actions) in task.rows().iter().enumerate() {
            for (a, row) in actions.iter().enumerate() {
                if row.iter().any(|t| t.next == initial && t.prob > 0.0) {
                    return Err(Error::InvalidTask(format!(
                        "row ({s},{a}) enters the initial state"
                    )));
                }
            }
        }
        for row in &task.rows()[terminal] {
            let ok = row
                .iter()
                .filter(|t| t.prob > 0.0)
                .all(|t| t.next == terminal && t.reward == 0.0 && t.cost == 0.0);
            if !ok {
                return Err(Error::InvalidTask(
                    "terminal state must self-loop with zero reward and cost".into(),
                ));
            }
        }
        Ok(Self {
            task,
            initial,
            terminal,
        })
    }

    pub fn task(&self) -> &TabularSmdp {
        &self.task
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn terminal(&self) -> usize {
        self.terminal
    }

    pub fn n_states(&self) -> usize {
        self.task.n_states()
    }

    /// The same split with every reward replaced by `f(reward)`.
    pub fn map_rewards(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            task: self.task.map_rewards(f),
            initial: self.initial,
            terminal: self.terminal,
        }
    }

    /// Successor in the original recurrent task: the terminal stands for
    /// a return to the initial state.
    pub fn recurrent_next(&self, next: usize) -> usize {
        if next == self.terminal {
            self.initial
        } else {
            next
        }
    }

    /// Non-terminal states in ascending order.
    pub fn live_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_states()).filter(move |&s| s != self.terminal)
    }
}

/// Splits `task` at `initial`: a terminal state is appended with index
/// `n`, and every transition into `initial` is redirected to it.
pub fn bertsekas_split(task: &TabularSmdp, initial: usize) -> Result<SplitTask> {
    let n = task.n_states();
    if initial >= n {
        return Err(Error::InvalidState(initial, n));
    }
    let terminal = n;
    let mut rows: Vec<Vec<Vec<Transition>>> = task
        .rows()
        .iter()
        .map(|actions| {
            actions
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|t| {
                            if t.next == initial {
                                Transition { next: terminal, ..*t }
                            } else {
                                *t
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    rows.push(vec![vec![Transition::new(terminal, 1.0, 0.0, 0.0)]]);
    SplitTask::new(TabularSmdp::new(rows)?, initial, terminal)
}

/// Simulates one transition of the split task.
pub fn sample_step<R: Rng + ?Sized>(
    split: &SplitTask,
    s: usize,
    a: usize,
    rng: &mut R,
) -> Result<(usize, f64, f64)> {
    split.task().sample(s, a, rng)
}
