use rand::Rng;

use super::{epsilon_greedy_action, QTable, SolverConfig, SolverResult};
use crate::task::SplitTask;

/// Undiscounted tabular Q-learning on the nudged rewards.
///
/// Episodes start at the initial state and restart there on reaching the
/// terminal state. With a reset period the process also jumps to a
/// uniformly drawn non-terminal state every `period` steps.
pub fn q_learning_solve<R: Rng + ?Sized>(
    split: &SplitTask,
    rho: f64,
    cfg: &SolverConfig,
    rng: &mut R,
    warm_start: Option<&QTable>,
) -> SolverResult {
    let task = split.task();
    let terminal = split.terminal();
    let mut q = warm_start
        .cloned()
        .unwrap_or_else(|| QTable::new(split, cfg.value_init));
    let live: Vec<usize> = split.live_states().collect();
    let mut visits: Vec<Vec<u64>> = if cfg.alpha.uses_visits() {
        (0..split.n_states())
            .map(|s| vec![0; task.n_actions(s)])
            .collect()
    } else {
        Vec::new()
    };

    let mut s = split.initial();
    for step in 0..cfg.budget {
        if let Some(period) = cfg.reset_period {
            if step > 0 && step % period == 0 {
                s = live[rng.gen_range(0..live.len())];
            }
        }
        let a = epsilon_greedy_action(q.row(s), cfg.epsilon, rng);
        let t = task.draw(s, a, rng);
        let target = t.reward - rho * t.cost + q.max(t.next);
        let alpha = if visits.is_empty() {
            cfg.alpha.eval(step, None)
        } else {
            let count = &mut visits[s][a];
            let rate = cfg.alpha.eval(step, Some(*count));
            *count += 1;
            rate
        };
        let slot = &mut q.row_mut(s)[a];
        *slot = (1.0 - alpha) * *slot + alpha * target;
        s = if t.next == terminal { split.initial() } else { t.next };
    }

    SolverResult {
        policy: q.greedy_policy(),
        v_si: q.max(split.initial()),
        q_table: q,
        samples_used: cfg.budget,
        sweeps_used: 0,
        converged: true,
        trace: Vec::new(),
    }
}
