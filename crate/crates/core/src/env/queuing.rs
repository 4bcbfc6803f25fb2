//! Access-control queuing: a customer at the head of a queue is accepted
//! onto a free server for a pay-off equal to its priority, or rejected.

use crate::error::{Error, Result};
use crate::task::{bertsekas_split, SplitTask, TabularSmdp, Transition, PROB_TOL};

pub const ACCEPT: usize = 0;
pub const REJECT: usize = 1;

/// How the states with no free server are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BusyLayout {
    /// One all-busy state regardless of the waiting customer.
    #[default]
    Single,
    /// One all-busy state per head-of-queue class; the split is at the
    /// first class. Same gains, but an episode lasts until the queue is
    /// full with a first-class customer waiting.
    PerClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueuingParams {
    pub n_servers: usize,
    /// Pay-off per priority class; the first class is always accepted.
    pub priorities: Vec<f64>,
    pub arrival_probs: Vec<f64>,
    /// Probability that a busy server frees between epochs.
    pub free_prob: f64,
    pub layout: BusyLayout,
}

impl Default for QueuingParams {
    fn default() -> Self {
        Self {
            n_servers: 10,
            priorities: vec![8.0, 4.0, 2.0, 1.0],
            arrival_probs: vec![0.4, 0.2, 0.2, 0.2],
            free_prob: 0.06,
            layout: BusyLayout::Single,
        }
    }
}

impl QueuingParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_servers == 0 || self.priorities.is_empty() {
            return Err(Error::InvalidArgument("queue needs servers and priorities".into()));
        }
        if self.priorities.len() != self.arrival_probs.len() {
            return Err(Error::InvalidArgument("one arrival probability per priority".into()));
        }
        let total: f64 = self.arrival_probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL || self.arrival_probs.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidArgument(format!("arrival probabilities sum to {total}")));
        }
        if !(self.free_prob > 0.0 && self.free_prob < 1.0) {
            return Err(Error::InvalidArgument(format!("free probability {}", self.free_prob)));
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        let k = self.priorities.len();
        match self.layout {
            BusyLayout::Single => k * self.n_servers + 1,
            BusyLayout::PerClass => k * (self.n_servers + 1),
        }
    }

    /// The recurrent all-busy state the task is split at.
    pub fn all_busy(&self) -> usize {
        self.state(0, 0)
    }

    /// State of a head-of-queue class with `free` free servers.
    pub fn state(&self, class: usize, free: usize) -> usize {
        let k = self.priorities.len();
        match (self.layout, free) {
            (BusyLayout::Single, 0) => k * self.n_servers,
            (BusyLayout::Single, f) => (f - 1) * k + class,
            (BusyLayout::PerClass, f) => f * k + class,
        }
    }

    /// `(class, free)` of a state; the class is `None` for the single
    /// all-busy state.
    pub fn decode(&self, s: usize) -> (Option<usize>, usize) {
        let k = self.priorities.len();
        match self.layout {
            BusyLayout::Single if s == k * self.n_servers => (None, 0),
            BusyLayout::Single => (Some(s % k), s / k + 1),
            BusyLayout::PerClass => (Some(s % k), s / k),
        }
    }
}

/// `P(k successes)` for `k = 0..=n`.
fn binomial(n: usize, p: f64) -> Vec<f64> {
    let mut probs = vec![0.0; n + 1];
    let mut coef = 1.0;
    for (k, slot) in probs.iter_mut().enumerate() {
        *slot = coef * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
        coef *= (n - k) as f64 / (k + 1) as f64;
    }
    probs
}

/// Builds the unsplit queuing task.
///
/// Between epochs each server that was busy when the decision was taken
/// frees independently; a server filled by the decision stays busy at
/// least one epoch. The next head-of-queue class is drawn independently of
/// the past. The first class has only the accept action, states without
/// a free server only reject.
pub fn queuing_smdp(p: &QueuingParams) -> Result<TabularSmdp> {
    p.validate()?;
    let n = p.n_servers;
    let freeing: Vec<Vec<f64>> = (0..=n).map(|busy| binomial(busy, p.free_prob)).collect();
    let successors = |free_before: usize, accepted: bool, reward: f64| -> Vec<Transition> {
        let free_after = free_before - usize::from(accepted);
        let mut out = Vec::new();
        for (freed, &pf) in freeing[n - free_before].iter().enumerate() {
            let free = free_after + freed;
            if free == 0 && p.layout == BusyLayout::Single {
                out.push(Transition::new(p.all_busy(), pf, reward, 1.0));
                continue;
            }
            for (class, &pa) in p.arrival_probs.iter().enumerate() {
                if pa > 0.0 {
                    out.push(Transition::new(p.state(class, free), pf * pa, reward, 1.0));
                }
            }
        }
        out
    };

    let mut rows = Vec::with_capacity(p.n_states());
    for s in 0..p.n_states() {
        let row = match p.decode(s) {
            (_, 0) => vec![successors(0, false, 0.0)],
            (Some(0), free) => vec![successors(free, true, p.priorities[0])],
            (Some(class), free) => vec![
                successors(free, true, p.priorities[class]),
                successors(free, false, 0.0),
            ],
            (None, _) => unreachable!("only the all-busy state has no class"),
        };
        rows.push(row);
    }
    TabularSmdp::new(rows)
}

/// The queuing task split at the all-busy state.
pub fn build_queuing_task(p: &QueuingParams) -> Result<SplitTask> {
    bertsekas_split(&queuing_smdp(p)?, p.all_busy())
}
