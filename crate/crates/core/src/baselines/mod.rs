//! Average-reward learners that update the gain estimate after every step,
//! expressed as one configurable engine, plus the coupled dynamic
//! programming iteration on the split task.

mod ssp;

use rand::Rng;

use crate::error::{Error, Result};
use crate::record::{RunRecord, Termination};
use crate::schedule::RateSchedule;
use crate::solvers::{epsilon_greedy_action, QTable};
use crate::task::{exact_policy_eval, SplitTask};

pub use ssp::{ssp_dp_run, SspConfig, SspRun};

/// How the gain estimate is updated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoRule {
    /// Accumulated rewards over accumulated costs, optionally smoothed by
    /// the beta schedule.
    Ratio,
    /// `rho += beta/k * (r + max Q(s') - max Q(s) - k rho)`.
    Corrected,
    /// Separate smoothed reward and cost averages, `rho = v / c`.
    TermWise,
    /// `rho += beta * max Q(s_I)`, projected onto `[-K, K]`.
    ReferenceState,
}

/// When the gain estimate is updated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateWhen {
    Always,
    /// Only after actions in the argmax set of the pre-update table.
    GreedyOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineSpec {
    pub name: String,
    pub rho_rule: RhoRule,
    pub update_when: UpdateWhen,
    pub alpha: RateSchedule,
    pub beta: Option<RateSchedule>,
    /// Bound of the gain projection.
    pub projection_k: Option<f64>,
    /// Run episodically on the split task instead of the recurrent process.
    pub use_split: bool,
}

impl BaselineSpec {
    fn preset(name: &str, rho_rule: RhoRule, update_when: UpdateWhen, alpha: RateSchedule, beta: Option<RateSchedule>) -> Self {
        Self {
            name: name.into(),
            rho_rule,
            update_when,
            alpha,
            beta,
            projection_k: None,
            use_split: false,
        }
    }

    pub fn r_learning(alpha: f64, beta: f64) -> Self {
        Self::preset(
            "r-learning",
            RhoRule::Corrected,
            UpdateWhen::GreedyOnly,
            RateSchedule::Constant(alpha),
            Some(RateSchedule::Constant(beta)),
        )
    }

    /// Constant rates of 0.01 for both values and gain.
    pub fn r_learning_1() -> Self {
        Self {
            name: "r-learning-1".into(),
            ..Self::r_learning(0.01, 0.01)
        }
    }

    /// A much slower gain rate of 1e-6.
    pub fn r_learning_2() -> Self {
        Self {
            name: "r-learning-2".into(),
            ..Self::r_learning(0.01, 1e-6)
        }
    }

    pub fn singh_3(alpha: f64, beta: f64) -> Self {
        Self::preset(
            "singh-3",
            RhoRule::Corrected,
            UpdateWhen::Always,
            RateSchedule::Constant(alpha),
            Some(RateSchedule::Constant(beta)),
        )
    }

    pub fn singh_4(alpha: f64) -> Self {
        Self::preset(
            "singh-4",
            RhoRule::Ratio,
            UpdateWhen::GreedyOnly,
            RateSchedule::Constant(alpha),
            None,
        )
    }

    pub fn smart() -> Self {
        Self::preset(
            "smart",
            RhoRule::Ratio,
            UpdateWhen::Always,
            RateSchedule::Dcm {
                alpha0: 1.0,
                tau: 1e6,
            },
            None,
        )
    }

    pub fn gosavi() -> Self {
        Self::preset(
            "gosavi",
            RhoRule::Ratio,
            UpdateWhen::Always,
            RateSchedule::Individual,
            Some(RateSchedule::Power { exponent: 1.0 }),
        )
    }

    pub fn robbins_monro() -> Self {
        Self::preset(
            "robbins-monro",
            RhoRule::TermWise,
            UpdateWhen::Always,
            RateSchedule::Individual,
            Some(RateSchedule::Power { exponent: 1.0 }),
        )
    }

    /// Rates `1/t^0.51` and `1/t`, projection onto `[-k, k]`.
    pub fn sspq(k: f64) -> Self {
        Self {
            projection_k: Some(k),
            use_split: true,
            ..Self::preset(
                "sspq",
                RhoRule::ReferenceState,
                UpdateWhen::Always,
                RateSchedule::Power { exponent: 0.51 },
                Some(RateSchedule::Power { exponent: 1.0 }),
            )
        }
    }

    /// Looks up a preset by name; `d` sizes the projection of SSPQ.
    pub fn by_name(name: &str, d: f64) -> Option<Self> {
        Some(match name {
            "r-learning-1" => Self::r_learning_1(),
            "r-learning-2" => Self::r_learning_2(),
            "singh-3" => Self::singh_3(0.01, 0.01),
            "singh-4" => Self::singh_4(0.01),
            "smart" => Self::smart(),
            "gosavi" => Self::gosavi(),
            "robbins-monro" => Self::robbins_monro(),
            "sspq" => Self::sspq(d),
            _ => return None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.alpha.validate()?;
        if let Some(b) = &self.beta {
            b.validate()?;
        }
        let needs_beta = !matches!(self.rho_rule, RhoRule::Ratio);
        if needs_beta && self.beta.is_none() {
            return Err(Error::InvalidArgument(format!(
                "{:?} gain rule needs a beta schedule",
                self.rho_rule
            )));
        }
        if let Some(k) = self.projection_k {
            if !(k > 0.0) {
                return Err(Error::InvalidArgument(format!("projection bound {k} must be positive")));
            }
        }
        if self.rho_rule == RhoRule::ReferenceState && !self.use_split {
            return Err(Error::InvalidArgument(
                "the reference-state rule runs on the split task".into(),
            ));
        }
        Ok(())
    }
}

/// One observed transition as seen by the gain update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainObservation {
    pub reward: f64,
    pub cost: f64,
    /// Pre-update `max_a Q(s, a)` of the departed state.
    pub max_q_here: f64,
    /// Pre-update `max_a Q(s', a)` of the next state.
    pub max_q_next: f64,
    /// Pre-update `max_a Q(s_I, a)`.
    pub max_q_initial: f64,
}

/// Gain estimate and the accumulators behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct GainEstimator {
    rule: RhoRule,
    rho: f64,
    reward_acc: f64,
    cost_acc: f64,
    projection_k: Option<f64>,
    updates: u64,
}

impl GainEstimator {
    /// Starts at zero gain. The term-wise accumulators start at `v = 0`,
    /// `c = 1`; the ratio sums start empty.
    pub fn new(rule: RhoRule, projection_k: Option<f64>) -> Self {
        let cost_acc = if rule == RhoRule::TermWise { 1.0 } else { 0.0 };
        Self {
            rule,
            rho: 0.0,
            reward_acc: 0.0,
            cost_acc,
            projection_k,
            updates: 0,
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Reward and cost accumulators: sums for the ratio rule, averages
    /// for the term-wise rule.
    pub fn accumulators(&self) -> (f64, f64) {
        (self.reward_acc, self.cost_acc)
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Applies one update; `beta` is ignored by the unsmoothed ratio rule
    /// when absent.
    pub fn update(&mut self, obs: &GainObservation, beta: Option<f64>) {
        self.updates += 1;
        match self.rule {
            RhoRule::Ratio => {
                self.reward_acc += obs.reward;
                self.cost_acc += obs.cost;
                let ratio = self.reward_acc / self.cost_acc;
                self.rho = match beta {
                    Some(b) => (1.0 - b) * self.rho + b * ratio,
                    None => ratio,
                };
            }
            RhoRule::Corrected => {
                let b = beta.unwrap_or(0.0);
                self.rho = (1.0 - b) * self.rho
                    + b / obs.cost * (obs.reward + obs.max_q_next - obs.max_q_here);
            }
            RhoRule::TermWise => {
                let b = beta.unwrap_or(0.0);
                self.reward_acc = (1.0 - b) * self.reward_acc + b * obs.reward;
                self.cost_acc = (1.0 - b) * self.cost_acc + b * obs.cost;
                self.rho = self.reward_acc / self.cost_acc;
            }
            RhoRule::ReferenceState => {
                let b = beta.unwrap_or(0.0);
                self.rho += b * obs.max_q_initial;
            }
        }
        if let Some(k) = self.projection_k {
            self.rho = self.rho.clamp(-k, k);
        }
    }
}

/// Run settings shared by all baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineOptions {
    pub steps: u64,
    pub epsilon: f64,
    pub reset_period: Option<u64>,
    /// Emit a record every this many steps.
    pub record_every: u64,
    /// Abort when `|rho|` exceeds ten times this bound.
    pub d_guard: Option<f64>,
    /// Evaluate the greedy policy exactly at each record.
    pub evaluate: bool,
}

impl BaselineOptions {
    pub fn new(steps: u64, epsilon: f64) -> Self {
        Self {
            steps,
            epsilon,
            reset_period: None,
            record_every: steps.max(1),
            d_guard: None,
            evaluate: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.record_every == 0 || self.reset_period == Some(0) {
            return Err(Error::InvalidArgument("step counts must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidArgument(format!(
                "exploration probability {} outside [0, 1]",
                self.epsilon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRun {
    /// `v_star` is `max_a Q(s_I, a)`; `samples` counts steps since the
    /// previous record.
    pub records: Vec<RunRecord>,
    /// Exact gain of each record's greedy policy, when evaluated and
    /// terminating.
    pub policy_gains: Vec<Option<f64>>,
    pub termination: Termination,
    pub rho: f64,
    pub rho_updates: u64,
    pub q_table: QTable,
}

/// Runs one baseline for `opts.steps` transitions.
///
/// Without the split, reaching the terminal state means returning to the
/// initial state and values bootstrap from it; with the split the target
/// uses the terminal value zero and the episode restarts.
pub fn generic_avg_reward_run<R: Rng + ?Sized>(
    split: &SplitTask,
    spec: &BaselineSpec,
    opts: &BaselineOptions,
    rng: &mut R,
) -> Result<BaselineRun> {
    spec.validate()?;
    opts.validate()?;
    let task = split.task();
    let (initial, terminal) = (split.initial(), split.terminal());
    let live: Vec<usize> = split.live_states().collect();
    let mut q = QTable::new(split, 0.0);
    let mut visits: Vec<Vec<u64>> = (0..split.n_states())
        .map(|s| vec![0; task.n_actions(s)])
        .collect();
    let mut gain = GainEstimator::new(spec.rho_rule, spec.projection_k);
    let mut records = Vec::new();
    let mut policy_gains = Vec::new();
    let mut termination = Termination::Budget;
    let mut since_record = 0;

    let mut s = initial;
    for step in 0..opts.steps {
        if let Some(period) = opts.reset_period {
            if step > 0 && step % period == 0 {
                s = live[rng.gen_range(0..live.len())];
            }
        }
        let a = epsilon_greedy_action(q.row(s), opts.epsilon, rng);
        let t = task.draw(s, a, rng);
        let next = if spec.use_split { t.next } else { split.recurrent_next(t.next) };
        let max_here = q.max(s);
        let greedy = q.get(s, a) == max_here;
        let obs = GainObservation {
            reward: t.reward,
            cost: t.cost,
            max_q_here: max_here,
            max_q_next: q.max(next),
            max_q_initial: q.max(initial),
        };

        let rho = gain.rho();
        let count = &mut visits[s][a];
        let alpha = spec.alpha.eval(step, Some(*count));
        *count += 1;
        let target = t.reward - rho * t.cost + obs.max_q_next;
        let slot = &mut q.row_mut(s)[a];
        *slot = (1.0 - alpha) * *slot + alpha * target;

        if spec.update_when == UpdateWhen::Always || greedy {
            let beta = spec.beta.map(|b| b.eval(gain.updates(), None));
            gain.update(&obs, beta);
        }
        s = if next == terminal { initial } else { next };
        since_record += 1;

        let diverged = !gain.rho().is_finite()
            || opts.d_guard.is_some_and(|d| gain.rho().abs() > 10.0 * d);
        if diverged || (step + 1) % opts.record_every == 0 || step + 1 == opts.steps {
            let policy = q.greedy_policy();
            let exact = if opts.evaluate {
                exact_policy_eval(split, &policy).ok().map(|e| e.gain)
            } else {
                None
            };
            records.push(RunRecord {
                iter: step as usize + 1,
                rho: gain.rho(),
                v_star: q.max(initial),
                policy,
                samples: since_record,
                sweeps: 0,
                interval: None,
            });
            policy_gains.push(exact);
            since_record = 0;
        }
        if diverged {
            termination = Termination::Diverged;
            break;
        }
    }
    Ok(BaselineRun {
        records,
        policy_gains,
        termination,
        rho: gain.rho(),
        rho_updates: gain.updates(),
        q_table: q,
    })
}

#[cfg(test)]
mod tests;
