use rand::Rng;

use crate::error::{Error, Result};

/// Row-sum tolerance for transition distributions.
pub const PROB_TOL: f64 = 1e-12;

/// One nonzero entry `P(s' | s, a)` with the reward and cost collected on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub next: usize,
    pub prob: f64,
    pub reward: f64,
    pub cost: f64,
}

impl Transition {
    pub fn new(next: usize, prob: f64, reward: f64, cost: f64) -> Self {
        Self {
            next,
            prob,
            reward,
            cost,
        }
    }
}

/// A finite semi-Markov decision process stored as sparse transition rows,
/// indexed `[state][action]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularSmdp {
    rows: Vec<Vec<Vec<Transition>>>,
}

impl TabularSmdp {
    /// Validates and wraps transition rows.
    ///
    /// Every state needs at least one action, every row must be a
    /// probability distribution over valid states, and every nonzero
    /// expected action cost must have magnitude at least one.
    pub fn new(rows: Vec<Vec<Vec<Transition>>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidTask("no states".into()));
        }
        for (s, actions) in rows.iter().enumerate() {
            if actions.is_empty() {
                return Err(Error::InvalidTask(format!("state {s} has no actions")));
            }
            for (a, row) in actions.iter().enumerate() {
                if row.is_empty() {
                    return Err(Error::InvalidTask(format!("row ({s},{a}) is empty")));
                }
                let mut total = 0.0;
                let mut cost = 0.0;
                for t in row {
                    if t.next >= n {
                        return Err(Error::InvalidState(t.next, n));
                    }
                    if !(0.0..=1.0).contains(&t.prob) {
                        return Err(Error::InvalidTask(format!(
                            "probability {} in row ({s},{a}) outside [0,1]",
                            t.prob
                        )));
                    }
                    if !t.reward.is_finite() || !t.cost.is_finite() {
                        return Err(Error::InvalidTask(format!(
                            "non-finite reward or cost in row ({s},{a})"
                        )));
                    }
                    total += t.prob;
                    cost += t.prob * t.cost;
                }
                if (total - 1.0).abs() > PROB_TOL {
                    return Err(Error::InvalidTask(format!(
                        "row ({s},{a}) sums to {total}"
                    )));
                }
                if cost != 0.0 && cost.abs() < 1.0 - PROB_TOL {
                    return Err(Error::InvalidTask(format!(
                        "expected cost {cost} of ({s},{a}) is nonzero but below one"
                    )));
                }
            }
        }
        Ok(Self { rows })
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn n_actions(&self, s: usize) -> usize {
        self.rows[s].len()
    }

    pub fn actions_per_state(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    /// Sparse row of `(s, a)`. Panics on invalid indices.
    pub fn transitions(&self, s: usize, a: usize) -> &[Transition] {
        &self.rows[s][a]
    }

    pub fn rows(&self) -> &[Vec<Vec<Transition>>] {
        &self.rows
    }

    pub fn check_pair(&self, s: usize, a: usize) -> Result<()> {
        let n = self.n_states();
        if s >= n {
            return Err(Error::InvalidState(s, n));
        }
        let count = self.rows[s].len();
        if a >= count {
            return Err(Error::InvalidAction {
                state: s,
                action: a,
                count,
            });
        }
        Ok(())
    }

    pub fn expected_reward(&self, s: usize, a: usize) -> f64 {
        self.rows[s][a].iter().map(|t| t.prob * t.reward).sum()
    }

    pub fn expected_cost(&self, s: usize, a: usize) -> f64 {
        self.rows[s][a].iter().map(|t| t.prob * t.cost).sum()
    }

    /// Copy of the task with every reward passed through `f`.
    pub fn map_rewards(&self, f: impl Fn(f64) -> f64) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|actions| {
                actions
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|t| Transition {
                                reward: f(t.reward),
                                ..*t
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self { rows }
    }

    /// Draws a successor of `(s, a)`. Indices are assumed valid.
    pub fn draw<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> Transition {
        let row = &self.rows[s][a];
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for t in row {
            acc += t.prob;
            if u < acc {
                return *t;
            }
        }
        // rounding left a sliver above the cumulative sum
        *row.iter().rev().find(|t| t.prob > 0.0).unwrap_or(&row[row.len() - 1])
    }

    pub fn sample<R: Rng + ?Sized>(
        &self,
        s: usize,
        a: usize,
        rng: &mut R,
    ) -> Result<(usize, f64, f64)> {
        self.check_pair(s, a)?;
        let t = self.draw(s, a, rng);
        Ok((t.next, t.reward, t.cost))
    }
}

/// A deterministic stationary policy: one action index per state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Policy(Vec<usize>);

impl Policy {
    pub fn new(actions: Vec<usize>) -> Self {
        Self(actions)
    }

    /// Action 0 everywhere.
    pub fn first(task: &TabularSmdp) -> Self {
        Self(vec![0; task.n_states()])
    }

    pub fn action(&self, s: usize) -> usize {
        self.0[s]
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn validate(&self, task: &TabularSmdp) -> Result<()> {
        if self.0.len() != task.n_states() {
            return Err(Error::InvalidArgument(format!(
                "policy covers {} states, task has {}",
                self.0.len(),
                task.n_states()
            )));
        }
        for (s, &a) in self.0.iter().enumerate() {
            task.check_pair(s, a)?;
        }
        Ok(())
    }

    /// Number of states where the two policies choose different actions.
    pub fn disagreements(&self, other: &Policy) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

/// Enumerates all deterministic policies in lexicographic order
/// (state 0 most significant).
#[derive(Debug, Clone)]
pub struct PolicyIter {
    counts: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl PolicyIter {
    pub fn new(task: &TabularSmdp) -> Self {
        let counts = task.actions_per_state();
        Self {
            next: Some(vec![0; counts.len()]),
            counts,
        }
    }

    /// Size of the policy space, saturating.
    pub fn space_size(task: &TabularSmdp) -> u128 {
        task.actions_per_state()
            .iter()
            .fold(1u128, |acc, &n| acc.saturating_mul(n as u128))
    }
}

impl Iterator for PolicyIter {
    type Item = Policy;

    fn next(&mut self) -> Option<Policy> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        for s in (0..succ.len()).rev() {
            succ[s] += 1;
            if succ[s] < self.counts[s] {
                self.next = Some(succ);
                break;
            }
            succ[s] = 0;
        }
        Some(Policy(current))
    }
}
