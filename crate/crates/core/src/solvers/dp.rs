use super::{nudged_q_values, QTable, SolverConfig, SolverResult, SweepRecord, Backend};
use crate::task::SplitTask;

/// Value iteration on the nudged Bellman optimality equation, states in
/// ascending order. Gauss-Seidel updates in place, Jacobi from the previous
/// sweep.
pub fn dp_solve(
    split: &SplitTask,
    rho: f64,
    cfg: &SolverConfig,
    warm_start: Option<&QTable>,
) -> SolverResult {
    let task = split.task();
    let n = split.n_states();
    let terminal = split.terminal();
    let mut h: Vec<f64> = (0..n)
        .map(|s| match (s == terminal, warm_start) {
            (true, _) => 0.0,
            (false, Some(q)) => q.max(s),
            (false, None) => cfg.value_init,
        })
        .collect();
    let mut prev = h.clone();
    let in_place = cfg.backend == Backend::DpGaussSeidel;

    let mut trace = Vec::new();
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < cfg.budget {
        if !in_place {
            prev.copy_from_slice(&h);
        }
        let mut max_delta: f64 = 0.0;
        for s in 0..n {
            if s == terminal {
                continue;
            }
            let source = if in_place { &h } else { &prev };
            let mut best = f64::NEG_INFINITY;
            for a in 0..task.n_actions(s) {
                let q: f64 = task
                    .transitions(s, a)
                    .iter()
                    .map(|t| t.prob * (t.reward - rho * t.cost + source[t.next]))
                    .sum();
                best = best.max(q);
            }
            max_delta = max_delta.max((best - h[s]).abs());
            h[s] = best;
        }
        sweeps += 1;
        if cfg.trace {
            trace.push(SweepRecord {
                sweep: sweeps,
                max_delta,
                v_si: h[split.initial()],
            });
        }
        if max_delta < cfg.convergence_tol * scale(&h) {
            converged = true;
            break;
        }
        if !max_delta.is_finite() {
            break;
        }
    }

    let q_table = nudged_q_values(split, rho, &h);
    SolverResult {
        policy: q_table.greedy_policy(),
        v_si: q_table.max(split.initial()),
        q_table,
        samples_used: 0,
        sweeps_used: sweeps,
        converged,
        trace,
    }
}

/// Largest value magnitude, at least one; convergence tolerances are
/// relative to it.
pub(crate) fn scale(h: &[f64]) -> f64 {
    h.iter().fold(1.0_f64, |m, v| m.max(v.abs()))
}
