use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::env::random::{random_task, RandomTaskParams};
use crate::error::Error;

fn one_state(rows: Vec<Vec<Transition>>) -> TabularSmdp {
    TabularSmdp::new(vec![rows]).unwrap()
}

/// Split built by hand: state 0 initial, last state terminal.
fn manual_split(mut rows: Vec<Vec<Vec<Transition>>>) -> SplitTask {
    let terminal = rows.len();
    rows.push(vec![vec![Transition::new(terminal, 1.0, 0.0, 0.0)]]);
    SplitTask::new(TabularSmdp::new(rows).unwrap(), 0, terminal).unwrap()
}

#[test]
fn rejects_bad_rows() {
    let bad_sum = TabularSmdp::new(vec![vec![vec![Transition::new(0, 0.9, 0.0, 1.0)]]]);
    assert!(matches!(bad_sum, Err(Error::InvalidTask(_))));
    let small_cost = TabularSmdp::new(vec![vec![vec![Transition::new(0, 1.0, 0.0, 0.5)]]]);
    assert!(matches!(small_cost, Err(Error::InvalidTask(_))));
    let bad_next = TabularSmdp::new(vec![vec![vec![Transition::new(3, 1.0, 0.0, 1.0)]]]);
    assert!(matches!(bad_next, Err(Error::InvalidState(3, 1))));
}

#[test]
fn split_of_self_loop_reaches_terminal() {
    let task = one_state(vec![vec![Transition::new(0, 1.0, 2.0, 1.0)]]);
    let split = bertsekas_split(&task, 0).unwrap();
    assert_eq!(split.n_states(), 2);
    assert_eq!(split.terminal(), 1);
    assert_eq!(split.task().transitions(0, 0), &[Transition::new(1, 1.0, 2.0, 1.0)]);
    assert_eq!(split.task().transitions(1, 0), &[Transition::new(1, 1.0, 0.0, 0.0)]);
}

#[test]
fn split_rejects_bad_state() {
    let task = one_state(vec![vec![Transition::new(0, 1.0, 2.0, 1.0)]]);
    assert_eq!(bertsekas_split(&task, 1), Err(Error::InvalidState(1, 1)));
}

#[test]
fn split_invariants_on_random_task() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let params = RandomTaskParams {
        n_states: 5,
        max_actions: 3,
        ..Default::default()
    };
    let split = random_task(&params, &mut rng).unwrap();
    let task = split.task();
    for s in 0..split.n_states() {
        for a in 0..task.n_actions(s) {
            let row = task.transitions(s, a);
            let sum: f64 = row.iter().map(|t| t.prob).sum();
            assert!((sum - 1.0).abs() <= PROB_TOL);
            assert!(row.iter().all(|t| t.next != split.initial()));
        }
    }
}

#[test]
fn split_preserves_other_transitions_bit_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = RandomTaskParams {
        n_states: 5,
        max_actions: 3,
        ..Default::default()
    };
    let base = random_task(&params, &mut rng).unwrap();
    // rebuild an unsplit task from the split one, then split at state 2
    let rows: Vec<Vec<Vec<Transition>>> = (0..base.n_states() - 1)
        .map(|s| {
            (0..base.task().n_actions(s))
                .map(|a| {
                    base.task()
                        .transitions(s, a)
                        .iter()
                        .map(|t| Transition {
                            next: base.recurrent_next(t.next),
                            ..*t
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let task = TabularSmdp::new(rows).unwrap();
    let split = bertsekas_split(&task, 2).unwrap();
    for s in 0..task.n_states() {
        for a in 0..task.n_actions(s) {
            for (orig, new) in task.transitions(s, a).iter().zip(split.task().transitions(s, a)) {
                if orig.next == 2 {
                    assert_eq!(new.next, split.terminal());
                    assert_eq!(new.prob.to_bits(), orig.prob.to_bits());
                } else {
                    assert_eq!(orig.next, new.next);
                    assert_eq!(orig.prob.to_bits(), new.prob.to_bits());
                    assert_eq!(orig.reward.to_bits(), new.reward.to_bits());
                    assert_eq!(orig.cost.to_bits(), new.cost.to_bits());
                }
            }
        }
    }
}

#[test]
fn eval_one_step_episode() {
    let split = manual_split(vec![vec![vec![Transition::new(1, 1.0, 3.0, 2.0)]]]);
    let e = exact_policy_eval(&split, &Policy::new(vec![0, 0])).unwrap();
    assert_eq!((e.value, e.cost, e.gain), (3.0, 2.0, 1.5));
}

#[test]
fn eval_two_step_chain() {
    let split = manual_split(vec![
        vec![vec![Transition::new(1, 1.0, 1.0, 1.0)]],
        vec![vec![Transition::new(2, 1.0, 2.0, 3.0)]],
    ]);
    let e = exact_policy_eval(&split, &Policy::new(vec![0, 0, 0])).unwrap();
    approx::assert_abs_diff_eq!(e.value, 3.0, epsilon = 1e-14);
    approx::assert_abs_diff_eq!(e.cost, 4.0, epsilon = 1e-14);
    approx::assert_abs_diff_eq!(e.gain, 0.75, epsilon = 1e-14);
}

#[test]
fn eval_geometric_restart() {
    // s_I exits with reward 1 w.p. 0.5, otherwise passes through a zero-reward
    // state that returns to its own copy of the restart
    let split = manual_split(vec![
        vec![vec![
            Transition::new(2, 0.5, 1.0, 1.0),
            Transition::new(1, 0.5, 0.0, 1.0),
        ]],
        vec![vec![
            Transition::new(2, 0.5, 1.0, 1.0),
            Transition::new(1, 0.5, 0.0, 1.0),
        ]],
    ]);
    let e = exact_policy_eval(&split, &Policy::new(vec![0, 0, 0])).unwrap();
    approx::assert_abs_diff_eq!(e.value, 1.0, epsilon = 1e-12);
    approx::assert_abs_diff_eq!(e.cost, 2.0, epsilon = 1e-12);
    approx::assert_abs_diff_eq!(e.gain, 0.5, epsilon = 1e-12);
}

#[test]
fn eval_detects_non_termination() {
    let split = manual_split(vec![
        vec![vec![Transition::new(1, 1.0, 1.0, 1.0)]],
        vec![
            vec![Transition::new(1, 1.0, 1.0, 1.0)],
            vec![Transition::new(2, 1.0, 1.0, 1.0)],
        ],
    ]);
    assert_eq!(
        exact_policy_eval(&split, &Policy::new(vec![0, 0, 0])),
        Err(Error::NonTerminating(0))
    );
    assert!(exact_policy_eval(&split, &Policy::new(vec![0, 1, 0])).is_ok());
    assert_eq!(gain_optimal_oracle(&split), Err(Error::NonTerminating(0)));
}

#[test]
fn oracle_prefers_higher_rate_over_sure_win() {
    // action 0: +1 for sure after 100 unit steps; action 1: ±1 coin at 0.6 after 10
    let split = manual_split(vec![vec![
        vec![Transition::new(1, 1.0, 1.0, 100.0)],
        vec![
            Transition::new(1, 0.6, 1.0, 10.0),
            Transition::new(1, 0.4, -1.0, 10.0),
        ],
    ]]);
    let (policy, gain) = gain_optimal_oracle(&split).unwrap();
    assert_eq!(policy.action(0), 1);
    approx::assert_abs_diff_eq!(gain, 0.02, epsilon = 1e-15);
    let sure = exact_policy_eval(&split, &Policy::new(vec![0, 0])).unwrap();
    approx::assert_abs_diff_eq!(sure.gain, 0.01, epsilon = 1e-15);
}

#[test]
fn oracle_single_policy() {
    let split = manual_split(vec![vec![vec![Transition::new(1, 1.0, 3.0, 2.0)]]]);
    let (policy, gain) = gain_optimal_oracle(&split).unwrap();
    assert_eq!(policy.actions(), &[0, 0]);
    assert_eq!(gain, 1.5);
}

/// Recursive enumeration, independent of `PolicyIter`.
fn brute_force_best(split: &SplitTask, prefix: &mut Vec<usize>, best: &mut f64) {
    let s = prefix.len();
    if s == split.n_states() {
        let e = exact_policy_eval(split, &Policy::new(prefix.clone())).unwrap();
        *best = best.max(e.gain);
        return;
    }
    for a in 0..split.task().n_actions(s) {
        prefix.push(a);
        brute_force_best(split, prefix, best);
        prefix.pop();
    }
}

#[test]
fn oracle_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let split = random_task(&RandomTaskParams::default(), &mut rng).unwrap();
        let (policy, gain) = gain_optimal_oracle(&split).unwrap();
        let mut best = f64::NEG_INFINITY;
        brute_force_best(&split, &mut Vec::new(), &mut best);
        assert_eq!(gain, best);
        assert_eq!(exact_policy_eval(&split, &policy).unwrap().gain, gain);
    }
}

#[test]
fn oracle_value_is_zero_under_nudge() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let split = random_task(&RandomTaskParams::default(), &mut rng).unwrap();
        let (_, rho) = gain_optimal_oracle(&split).unwrap();
        let best = PolicyIter::new(split.task())
            .map(|p| {
                let e = exact_policy_eval(&split, &p).unwrap();
                e.value - rho * e.cost
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(best.abs() <= 1e-9, "max nudged value {best}");
    }
}

#[test]
fn policy_iter_is_lexicographic() {
    let task = TabularSmdp::new(vec![
        vec![vec![Transition::new(0, 1.0, 0.0, 1.0)]; 2],
        vec![vec![Transition::new(0, 1.0, 0.0, 1.0)]; 3],
    ])
    .unwrap();
    let all: Vec<Vec<usize>> = PolicyIter::new(&task).map(|p| p.actions().to_vec()).collect();
    assert_eq!(
        all,
        vec![vec![0, 0], vec![0, 1], vec![0, 2], vec![1, 0], vec![1, 1], vec![1, 2]]
    );
    assert_eq!(PolicyIter::space_size(&task), 6);
}

#[test]
fn sample_deterministic_row() {
    let split = manual_split(vec![vec![vec![Transition::new(1, 1.0, 3.0, 2.0)]]]);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        assert_eq!(sample_step(&split, 0, 0, &mut rng).unwrap(), (1, 3.0, 2.0));
        assert_eq!(sample_step(&split, 1, 0, &mut rng).unwrap(), (1, 0.0, 0.0));
    }
    assert!(sample_step(&split, 0, 1, &mut rng).is_err());
}

#[test]
fn sample_frequencies_within_three_standard_errors() {
    let split = manual_split(vec![vec![vec![
        Transition::new(0, 0.0, 0.0, 1.0),
        Transition::new(1, 0.4, 1.0, 1.0),
        Transition::new(1, 0.6, 2.0, 1.0),
    ]]]);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 1_000_000;
    let hits = (0..n)
        .filter(|_| sample_step(&split, 0, 0, &mut rng).unwrap().1 == 1.0)
        .count();
    let freq = hits as f64 / n as f64;
    let se = (0.4 * 0.6 / n as f64).sqrt();
    assert!((freq - 0.4).abs() <= 3.0 * se, "freq {freq}");
}

#[test]
fn simulation_matches_exact_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let params = RandomTaskParams {
        n_states: 3,
        max_actions: 2,
        ..Default::default()
    };
    for _ in 0..3 {
        let split = random_task(&params, &mut rng).unwrap();
        let policy = Policy::new(
            (0..split.n_states())
                .map(|s| split.task().n_actions(s) - 1)
                .collect(),
        );
        let exact = exact_policy_eval(&split, &policy).unwrap();
        let episodes = 100_000;
        let (mut vs, mut cs) = (Vec::with_capacity(episodes), Vec::with_capacity(episodes));
        for _ in 0..episodes {
            let (mut s, mut v, mut c) = (split.initial(), 0.0, 0.0);
            while s != split.terminal() {
                let (next, r, k) = sample_step(&split, s, policy.action(s), &mut rng).unwrap();
                v += r;
                c += k;
                s = next;
            }
            vs.push(v);
            cs.push(c);
        }
        for (xs, target) in [(&vs, exact.value), (&cs, exact.cost)] {
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            assert!((mean - target).abs() <= 3.0 * se, "mean {mean} vs {target}");
        }
    }
}

#[test]
fn task_file_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let split = random_task(&RandomTaskParams::default(), &mut rng).unwrap();
    let text = io::write_split(&split);
    let parsed = io::parse_task(&text).unwrap().into_split().unwrap();
    assert_eq!(parsed, split);
}

#[test]
fn task_file_errors() {
    assert!(matches!(io::parse_task("0 0 0 1 0 1"), Err(Error::Parse { line: 1, .. })));
    assert!(matches!(
        io::parse_task("smdp 1\n0 0 0 x 0 1"),
        Err(Error::Parse { line: 2, .. })
    ));
    // action 1 declared without action 0
    assert!(matches!(
        io::parse_task("smdp 1\n0 1 0 1 0 1"),
        Err(Error::InvalidTask(_))
    ));
    let ok = io::parse_task("# comment\nsmdp 2\n0 0 1 1 2 1\n1 0 1 1 0 0\nsplit 0 1\n").unwrap();
    assert_eq!(ok.split, Some((0, 1)));
}
