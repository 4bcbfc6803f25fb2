use crate::error::{Error, Result};
use crate::record::RunRecord;
use crate::schedule::RateSchedule;
use crate::solvers::dp::scale;
use crate::solvers::Backend;
use crate::task::{Policy, SplitTask};

/// Coupled value/gain iteration on the split task.
#[derive(Debug, Clone, PartialEq)]
pub struct SspConfig {
    /// `DpJacobi` or `DpGaussSeidel`.
    pub backend: Backend,
    /// Gain step sizes, indexed by sweep.
    pub beta: RateSchedule,
    /// Stop once no value and the gain move by less than this, relative to
    /// the largest value magnitude (at least one).
    pub tol: f64,
    pub max_sweeps: u64,
    /// Keep one record per sweep.
    pub trace: bool,
}

impl SspConfig {
    /// Gain steps `1/t`.
    pub fn new(backend: Backend, tol: f64, max_sweeps: u64) -> Self {
        Self {
            backend,
            beta: RateSchedule::Power { exponent: 1.0 },
            tol,
            max_sweeps,
            trace: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.backend.is_sampled() {
            return Err(Error::InvalidArgument("coupled iteration needs a sweep backend".into()));
        }
        if !(self.tol > 0.0) || self.max_sweeps == 0 {
            return Err(Error::InvalidArgument("tolerance and sweep budget must be positive".into()));
        }
        self.beta.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SspRun {
    pub rho: f64,
    pub sweeps: u64,
    pub converged: bool,
    pub values: Vec<f64>,
    pub policy: Policy,
    pub records: Vec<RunRecord>,
}

/// Sweeps `H(s) = max_a sum_s' P (r - rho k + H(s'))` with `H(s_T) = 0`
/// and moves the gain by `beta_t * H(s_I)` after each sweep, using the
/// value of the initial state from before the sweep.
pub fn ssp_dp_run(split: &SplitTask, cfg: &SspConfig) -> Result<SspRun> {
    cfg.validate()?;
    let task = split.task();
    let n = split.n_states();
    let (initial, terminal) = (split.initial(), split.terminal());
    let in_place = cfg.backend == Backend::DpGaussSeidel;
    let mut h = vec![0.0; n];
    let mut prev = h.clone();
    let mut policy = vec![0; n];
    let mut rho = 0.0;
    let mut records = Vec::new();
    let mut sweeps = 0;
    let mut converged = false;

    while sweeps < cfg.max_sweeps {
        let h_initial = h[initial];
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
                if q > best {
                    best = q;
                    policy[s] = a;
                }
            }
            max_delta = max_delta.max((best - h[s]).abs());
            h[s] = best;
        }
        let step = cfg.beta.eval(sweeps, None) * h_initial;
        rho += step;
        sweeps += 1;
        if cfg.trace {
            records.push(RunRecord {
                iter: sweeps as usize,
                rho,
                v_star: h[initial],
                policy: Policy::new(policy.clone()),
                samples: 0,
                sweeps: 1,
                interval: None,
            });
        }
        if !rho.is_finite() || !max_delta.is_finite() {
            return Err(Error::Diverged(rho));
        }
        if max_delta < cfg.tol * scale(&h) && step.abs() < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(SspRun {
        rho,
        sweeps,
        converged,
        values: h,
        policy: Policy::new(policy),
        records,
    })
}
