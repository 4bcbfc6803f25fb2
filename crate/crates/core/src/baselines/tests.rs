use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::env::random::{random_positive_gain_task, RandomTaskParams};
use crate::nudging::estimate_d;
use crate::solvers::{Backend, SolverConfig};
use crate::task::{exact_policy_eval, gain_optimal_oracle, TabularSmdp, Transition};

fn obs(reward: f64, cost: f64) -> GainObservation {
    GainObservation {
        reward,
        cost,
        max_q_here: 0.0,
        max_q_next: 0.0,
        max_q_initial: 0.0,
    }
}

fn unit_cost(split: &SplitTask) -> SplitTask {
    let rows = split
        .task()
        .rows()
        .iter()
        .enumerate()
        .map(|(s, acts)| {
            let cost = if s == split.terminal() { 0.0 } else { 1.0 };
            acts.iter()
                .map(|ts| ts.iter().map(|t| Transition { cost, ..*t }).collect())
                .collect()
        })
        .collect();
    SplitTask::new(TabularSmdp::new(rows).unwrap(), split.initial(), split.terminal()).unwrap()
}

/// Two actions at a single recurrent state: reward 1 or 0, unit cost.
fn two_armed() -> SplitTask {
    let rows = vec![
        vec![
            vec![Transition::new(1, 1.0, 1.0, 1.0)],
            vec![Transition::new(1, 1.0, 0.0, 1.0)],
        ],
        vec![vec![Transition::new(1, 1.0, 0.0, 0.0)]],
    ];
    SplitTask::new(TabularSmdp::new(rows).unwrap(), 0, 1).unwrap()
}

#[test]
fn ratio_rule_example() {
    let mut g = GainEstimator::new(RhoRule::Ratio, None);
    g.update(&obs(1.0, 1.0), None);
    g.update(&obs(2.0, 1.0), None);
    assert_eq!(g.rho(), 1.5);
    assert_eq!(g.accumulators(), (3.0, 2.0));
}

#[test]
fn corrected_rule_step() {
    let mut g = GainEstimator::new(RhoRule::Corrected, None);
    let o = GainObservation {
        reward: 3.0,
        cost: 2.0,
        max_q_here: 1.0,
        max_q_next: 0.5,
        max_q_initial: 0.0,
    };
    g.update(&o, Some(0.1));
    assert!((g.rho() - 0.1 / 2.0 * 2.5).abs() < 1e-15);
}

#[test]
fn reference_state_rule_projects() {
    let mut g = GainEstimator::new(RhoRule::ReferenceState, Some(2.0));
    let mut o = obs(0.0, 1.0);
    o.max_q_initial = 30.0;
    g.update(&o, Some(0.5));
    assert_eq!(g.rho(), 2.0);
    o.max_q_initial = -100.0;
    g.update(&o, Some(0.5));
    assert_eq!(g.rho(), -2.0);
}

#[test]
fn term_wise_starts_at_zero() {
    let g = GainEstimator::new(RhoRule::TermWise, None);
    assert_eq!(g.rho(), 0.0);
    assert_eq!(g.accumulators(), (0.0, 1.0));
}

proptest! {
    #[test]
    fn term_wise_is_ratio_of_accumulators(
        steps in prop::collection::vec((-5.0f64..5.0, 1.0f64..4.0, 0.0f64..1.0), 1..50)
    ) {
        let mut g = GainEstimator::new(RhoRule::TermWise, None);
        for (r, k, b) in steps {
            g.update(&obs(r, k), Some(b));
            let (v, c) = g.accumulators();
            prop_assert_eq!(g.rho(), v / c);
        }
    }
}

#[test]
fn presets_are_consistent() {
    for name in ["r-learning-1", "r-learning-2", "singh-3", "singh-4", "smart", "gosavi", "robbins-monro", "sspq"] {
        BaselineSpec::by_name(name, 10.0).unwrap().validate().unwrap();
    }
    assert!(BaselineSpec::by_name("h-learning", 1.0).is_none());
    let mut bad = BaselineSpec::r_learning_1();
    bad.beta = None;
    assert!(bad.validate().is_err());
    let mut bad = BaselineSpec::sspq(1.0);
    bad.use_split = false;
    assert!(bad.validate().is_err());
}

/// Average-reward MDP R-learning written directly from its unit-cost form.
fn mdp_r_learning(split: &SplitTask, alpha: f64, beta: f64, steps: u64, eps: f64, seed: u64) -> (f64, QTable) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let task = split.task();
    let mut q = QTable::new(split, 0.0);
    let mut rho: f64 = 0.0;
    let mut s = split.initial();
    for _ in 0..steps {
        let a = epsilon_greedy_action(q.row(s), eps, &mut rng);
        let t = task.draw(s, a, &mut rng);
        let next = split.recurrent_next(t.next);
        let greedy = q.get(s, a) == q.max(s);
        let (here, there) = (q.max(s), q.max(next));
        let old = q.get(s, a);
        q.row_mut(s)[a] = (1.0 - alpha) * old + alpha * (t.reward - rho + there);
        if greedy {
            rho = (1.0 - beta) * rho + beta * (t.reward + there - here);
        }
        s = next;
    }
    (rho, q)
}

#[test]
fn unit_costs_reduce_to_mdp_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for seed in 0..5 {
        let split = unit_cost(&random_positive_gain_task(&RandomTaskParams::default(), 0.0, &mut rng).unwrap());
        let (rho, q) = mdp_r_learning(&split, 0.05, 0.01, 20_000, 0.1, seed);
        let spec = BaselineSpec::r_learning(0.05, 0.01);
        let mut run_rng = ChaCha8Rng::seed_from_u64(seed);
        let run = generic_avg_reward_run(&split, &spec, &BaselineOptions::new(20_000, 0.1), &mut run_rng).unwrap();
        assert_eq!(run.rho.to_bits(), rho.to_bits());
        assert_eq!(run.q_table, q);
    }
}

#[test]
fn greedy_gating() {
    let split = two_armed();
    let spec = BaselineSpec::r_learning(0.1, 0.01);
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let run = generic_avg_reward_run(&split, &spec, &BaselineOptions::new(10_000, 0.0), &mut rng).unwrap();
    assert_eq!(run.rho_updates, 10_000);

    // after the first step the rewarding arm is the unique argmax
    let n = 100_000;
    let run = generic_avg_reward_run(&split, &spec, &BaselineOptions::new(n, 1.0), &mut rng).unwrap();
    let freq = run.rho_updates as f64 / n as f64;
    let se = (0.25 / n as f64).sqrt();
    assert!((freq - 0.5).abs() <= 3.0 * se + 1.0 / n as f64, "{freq}");
}

#[test]
fn records_and_divergence_guard() {
    let split = two_armed();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut opts = BaselineOptions::new(1000, 0.1);
    opts.record_every = 100;
    opts.evaluate = true;
    let run = generic_avg_reward_run(&split, &BaselineSpec::smart(), &opts, &mut rng).unwrap();
    assert_eq!(run.records.len(), 10);
    assert_eq!(run.records.iter().map(|r| r.samples).sum::<u64>(), 1000);
    assert_eq!(run.policy_gains.last(), Some(&Some(1.0)));
    assert_eq!(run.termination, Termination::Budget);

    opts.d_guard = Some(0.01);
    let run = generic_avg_reward_run(&split, &BaselineSpec::smart(), &opts, &mut rng).unwrap();
    assert_eq!(run.termination, Termination::Diverged);
    assert!(run.records.len() < 10);
}

#[test]
fn sspq_converges_to_oracle_gain() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let split = random_positive_gain_task(&RandomTaskParams::default(), 0.2, &mut rng).unwrap();
    let (_, gain) = gain_optimal_oracle(&split).unwrap();
    let d = estimate_d(&split, &SolverConfig::dp(Backend::DpGaussSeidel, 1e-12, 100_000), &mut rng)
        .unwrap()
        .d;
    let mut opts = BaselineOptions::new(1_000_000, 0.1);
    opts.reset_period = Some(10);
    let run = generic_avg_reward_run(&split, &BaselineSpec::sspq(d), &opts, &mut rng).unwrap();
    assert!((run.rho - gain).abs() <= 0.02 * gain, "{} vs {gain}", run.rho);
}

#[test]
fn ratio_learners_approach_gain() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let split = random_positive_gain_task(&RandomTaskParams::default(), 0.2, &mut rng).unwrap();
    let (_, gain) = gain_optimal_oracle(&split).unwrap();
    for spec in [BaselineSpec::smart(), BaselineSpec::gosavi(), BaselineSpec::robbins_monro()] {
        let run = generic_avg_reward_run(&split, &spec, &BaselineOptions::new(500_000, 0.1), &mut rng).unwrap();
        let g = exact_policy_eval(&split, &run.q_table.greedy_policy()).unwrap().gain;
        assert!((g - gain).abs() <= 1e-12, "{}: greedy gain {g} vs {gain}", spec.name);
        assert!((run.rho - gain).abs() <= 0.1 * gain, "{}: {} vs {gain}", spec.name, run.rho);
    }
}

#[test]
fn ssp_dp_finds_oracle_gain() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    for _ in 0..20 {
        let split = random_positive_gain_task(&RandomTaskParams::default(), 0.0, &mut rng).unwrap();
        let (best, gain) = gain_optimal_oracle(&split).unwrap();
        for backend in [Backend::DpJacobi, Backend::DpGaussSeidel] {
            let run = ssp_dp_run(&split, &SspConfig::new(backend, 1e-10, 1_000_000)).unwrap();
            assert!(run.converged);
            assert!((run.rho - gain).abs() <= 1e-6, "{} vs {gain}", run.rho);
            assert_eq!(run.policy.actions()[..split.terminal()], best.actions()[..split.terminal()]);
        }
    }
}

#[test]
fn ssp_dp_rejects_sampled_backend() {
    let cfg = SspConfig::new(Backend::QLearning, 1e-6, 10);
    assert!(ssp_dp_run(&two_armed(), &cfg).is_err());
}
