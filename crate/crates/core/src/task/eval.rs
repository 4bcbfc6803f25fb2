use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::model::{Policy, PolicyIter};
use super::split::SplitTask;
use crate::error::{Error, Result};

/// Largest policy space the brute-force oracle will enumerate.
pub const ORACLE_LIMIT: u128 = 1_000_000;

/// Expected cumulative reward and cost of one episode from the initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyEval {
    pub value: f64,
    pub cost: f64,
    pub gain: f64,
}

/// States reachable from the initial state under `policy`, terminal excluded.
fn reachable(split: &SplitTask, policy: &Policy) -> Vec<usize> {
    let task = split.task();
    let mut seen = vec![false; split.n_states()];
    let mut order = Vec::new();
    let mut queue = VecDeque::from([split.initial()]);
    seen[split.initial()] = true;
    while let Some(s) = queue.pop_front() {
        if s == split.terminal() {
            continue;
        }
        order.push(s);
        for t in task.transitions(s, policy.action(s)) {
            if t.prob > 0.0 && !seen[t.next] {
                seen[t.next] = true;
                queue.push_back(t.next);
            }
        }
    }
    order.sort_unstable();
    order
}

/// Evaluates `policy` exactly by solving the absorbing-chain system
/// `(I - Q) x = b` over the states it can visit.
///
/// Termination is decided on the transition graph before solving: every
/// visited state must have a path to the terminal state.
pub fn exact_policy_eval(split: &SplitTask, policy: &Policy) -> Result<PolicyEval> {
    policy.validate(split.task())?;
    let task = split.task();
    let states = reachable(split, policy);
    let mut index = vec![usize::MAX; split.n_states()];
    for (i, &s) in states.iter().enumerate() {
        index[s] = i;
    }

    // backward search from the terminal over the visited subgraph
    let m = states.len();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut exits = vec![false; m];
    for (i, &s) in states.iter().enumerate() {
        for t in task.transitions(s, policy.action(s)) {
            if t.prob <= 0.0 {
                continue;
            }
            if t.next == split.terminal() {
                exits[i] = true;
            } else {
                preds[index[t.next]].push(i);
            }
        }
    }
    let mut drains = exits.clone();
    let mut queue: VecDeque<usize> = (0..m).filter(|&i| exits[i]).collect();
    while let Some(i) = queue.pop_front() {
        for &p in &preds[i] {
            if !drains[p] {
                drains[p] = true;
                queue.push_back(p);
            }
        }
    }
    if let Some(i) = drains.iter().position(|d| !d) {
        return Err(Error::NonTerminating(states[i]));
    }

    let mut system = DMatrix::<f64>::identity(m, m);
    let mut rhs = DMatrix::<f64>::zeros(m, 2);
    for (i, &s) in states.iter().enumerate() {
        for t in task.transitions(s, policy.action(s)) {
            rhs[(i, 0)] += t.prob * t.reward;
            rhs[(i, 1)] += t.prob * t.cost;
            if t.next != split.terminal() {
                system[(i, index[t.next])] -= t.prob;
            }
        }
    }
    let solution = system
        .lu()
        .solve(&rhs)
        .ok_or(Error::NonTerminating(split.initial()))?;
    let row = index[split.initial()];
    let value = solution[(row, 0)];
    let cost = solution[(row, 1)];
    if !value.is_finite() || !cost.is_finite() {
        return Err(Error::NonTerminating(split.initial()));
    }
    if cost < 1.0 - 1e-9 {
        return Err(Error::InvalidTask(format!(
            "episode cost {cost} is below one"
        )));
    }
    Ok(PolicyEval {
        value,
        cost,
        gain: value / cost,
    })
}

/// Value of every state under `policy` with per-step rewards `r - rho*k`,
/// terminal pinned at zero. Used to cross-check dynamic programming.
pub fn nudged_state_values(split: &SplitTask, policy: &Policy, rho: f64) -> Result<Vec<f64>> {
    policy.validate(split.task())?;
    let task = split.task();
    let live: Vec<usize> = split.live_states().collect();
    let mut index = vec![usize::MAX; split.n_states()];
    for (i, &s) in live.iter().enumerate() {
        index[s] = i;
    }
    let m = live.len();
    let mut system = DMatrix::<f64>::identity(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    for (i, &s) in live.iter().enumerate() {
        for t in task.transitions(s, policy.action(s)) {
            rhs[i] += t.prob * (t.reward - rho * t.cost);
            if t.next != split.terminal() {
                system[(i, index[t.next])] -= t.prob;
            }
        }
    }
    let x = system
        .lu()
        .solve(&rhs)
        .ok_or(Error::NonTerminating(split.initial()))?;
    let mut out = vec![0.0; split.n_states()];
    for (i, &s) in live.iter().enumerate() {
        out[s] = x[i];
    }
    Ok(out)
}

/// Gain-optimal policy by exhaustive enumeration.
///
/// Ties go to the lexicographically first policy. Fails if any policy
/// does not terminate.
pub fn gain_optimal_oracle(split: &SplitTask) -> Result<(Policy, f64)> {
    let size = PolicyIter::space_size(split.task());
    if size > ORACLE_LIMIT {
        return Err(Error::PolicySpaceTooLarge(size));
    }
    let mut best: Option<(Policy, f64)> = None;
    for policy in PolicyIter::new(split.task()) {
        let eval = exact_policy_eval(split, &policy)?;
        if best.as_ref().map_or(true, |(_, g)| eval.gain > *g) {
            best = Some((policy, eval.gain));
        }
    }
    best.ok_or_else(|| Error::InvalidTask("empty policy space".into()))
}

/// Gain-optimal policy by parametric iteration: solve the nudged task at
/// the current gain with value iteration, evaluate its greedy policy
/// exactly and move the gain to that policy's ratio, until the gain stops
/// increasing. Value iteration stops once no value moves by more than
/// `tol`; with `tol = 0` the result is exact on acyclic tasks.
pub fn dinkelbach_gain(split: &SplitTask, tol: f64, max_sweeps: usize) -> Result<(Policy, f64)> {
    let task = split.task();
    let n = split.n_states();
    let mut rho = 0.0;
    let mut best: Option<(Policy, f64)> = None;
    for _ in 0..1000 {
        let mut h = vec![0.0; n];
        let mut actions = vec![0; n];
        let mut settled = false;
        for _ in 0..max_sweeps {
            let mut changed = false;
            for s in split.live_states() {
                let (a, q) = (0..task.n_actions(s))
                    .map(|a| {
                        let q: f64 = task
                            .transitions(s, a)
                            .iter()
                            .map(|t| t.prob * (t.reward - rho * t.cost + h[t.next]))
                            .sum();
                        (a, q)
                    })
                    .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
                if (q - h[s]).abs() > tol {
                    changed = true;
                }
                h[s] = q;
                actions[s] = a;
            }
            if !changed {
                settled = true;
                break;
            }
        }
        if !settled {
            return Err(Error::NotConverged);
        }
        let policy = Policy::new(actions);
        let gain = exact_policy_eval(split, &policy)?.gain;
        if best.as_ref().is_some_and(|(_, g)| gain <= *g) {
            break;
        }
        rho = gain;
        best = Some((policy, gain));
    }
    best.ok_or(Error::NotConverged)
}
