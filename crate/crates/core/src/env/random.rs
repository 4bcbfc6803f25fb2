use rand::Rng;

use crate::error::{Error, Result};
use crate::task::{bertsekas_split, gain_optimal_oracle, SplitTask, TabularSmdp, Transition};

/// Small dense random tasks, used as an enumerable test suite.
///
/// Every row gives positive probability to every state, so every policy
/// visits every state and returns to state 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomTaskParams {
    pub n_states: usize,
    pub max_actions: usize,
    pub reward_range: (f64, f64),
    pub cost_range: (f64, f64),
}

impl Default for RandomTaskParams {
    fn default() -> Self {
        Self {
            n_states: 4,
            max_actions: 2,
            reward_range: (-1.0, 2.0),
            cost_range: (1.0, 3.0),
        }
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

/// Builds a random task and splits it at state 0.
pub fn random_task<R: Rng + ?Sized>(p: &RandomTaskParams, rng: &mut R) -> Result<SplitTask> {
    if p.n_states == 0 || p.max_actions == 0 {
        return Err(Error::InvalidArgument("empty random task".into()));
    }
    if p.cost_range.0 < 1.0 {
        return Err(Error::InvalidArgument("costs must be at least one".into()));
    }
    let mut rows = Vec::with_capacity(p.n_states);
    for _ in 0..p.n_states {
        let n_actions = rng.gen_range(1..=p.max_actions);
        let mut actions = Vec::with_capacity(n_actions);
        for _ in 0..n_actions {
            let weights: Vec<f64> = (0..p.n_states).map(|_| 0.05 + rng.gen::<f64>()).collect();
            let total: f64 = weights.iter().sum();
            let row: Vec<Transition> = weights
                .iter()
                .enumerate()
                .map(|(next, w)| {
                    let reward = uniform(rng, p.reward_range);
                    let cost = uniform(rng, p.cost_range);
                    Transition::new(next, w / total, reward, cost)
                })
                .collect();
            actions.push(row);
        }
        rows.push(actions);
    }
    bertsekas_split(&TabularSmdp::new(rows)?, 0)
}

/// Draws random tasks until one has a policy with gain above `min_gain`.
pub fn random_positive_gain_task<R: Rng + ?Sized>(
    p: &RandomTaskParams,
    min_gain: f64,
    rng: &mut R,
) -> Result<SplitTask> {
    for _ in 0..1000 {
        let split = random_task(p, rng)?;
        if gain_optimal_oracle(&split)?.1 > min_gain {
            return Ok(split);
        }
    }
    Err(Error::NoPositiveGain)
}
