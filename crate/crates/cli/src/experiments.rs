//! Experiment drivers. Each returns its CSV artifacts; runs execute in
//! parallel on their own random streams and are collected in run order.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;

use nudge_core::baselines::{
    generic_avg_reward_run, ssp_dp_run, BaselineOptions, BaselineSpec, SspConfig,
};
use nudge_core::env::bertsekas::{generate_bertsekas_task, TestbedKind};
use nudge_core::env::queuing::{build_queuing_task, QueuingParams};
use nudge_core::env::tracking::{build_tracking_task, TrackingParams};
use nudge_core::geometry::ValueMismatch;
use nudge_core::geometry::sampling::{triangle_monte_carlo, MonteCarloSummary};
use nudge_core::nudging::{estimate_d, nudging_run, triangle_trace_csv, GainRule, NudgeConfig};
use nudge_core::record::run_log_csv;
use nudge_core::rng::{run_rng, RunRng};
use nudge_core::schedule::RateSchedule;
use nudge_core::solvers::{Backend, SolverConfig};
use nudge_core::task::io::parse_task;
use nudge_core::task::{exact_policy_eval, Policy, SplitTask};

use crate::config::{Experiment, Method, Settings};

/// Convergence tolerance of every dynamic-programming solve.
pub const DP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    /// `(file name, contents)` in a fixed order.
    pub files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn summary(&self) -> &str {
        self.files
            .iter()
            .find(|(name, _)| name == "summary.csv")
            .map_or("", |(_, text)| text)
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, text) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

pub fn run_experiment(s: &Settings, task_file: Option<&Path>) -> Result<Artifacts> {
    match s.experiment {
        Experiment::Queuing => {
            let split = build_queuing_task(&QueuingParams {
                layout: s.layout,
                ..Default::default()
            })?;
            single_task(&split, s)
        }
        Experiment::Tracking => single_task(&build_tracking_task(&TrackingParams::default())?, s),
        Experiment::Solve => {
            let path = task_file.context("solve needs a task file")?;
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            single_task(&parse_task(&text)?.into_split()?, s)
        }
        Experiment::BenchT1 => bench(TestbedKind::T1 { q: s.q }, s),
        Experiment::BenchT2 => bench(TestbedKind::T2, s),
        Experiment::TriangleMc => monte_carlo(s),
    }
}

fn dp_config(backend: Backend, max_sweeps: u64) -> SolverConfig {
    SolverConfig::dp(backend, DP_TOL, max_sweeps)
}

fn solver_config(s: &Settings) -> SolverConfig {
    if s.backend.is_sampled() {
        let cfg = SolverConfig::q_learning(RateSchedule::Constant(s.alpha), s.epsilon, s.budget);
        match s.reset {
            Some(k) => cfg.with_reset_period(k),
            None => cfg,
        }
    } else {
        dp_config(s.backend, s.budget)
    }
}

/// Reward bound from the settings, or estimated with Gauss-Seidel sweeps.
fn reward_bound(split: &SplitTask, s: &Settings, rng: &mut RunRng) -> Result<(f64, u64)> {
    match s.d {
        Some(d) => Ok((d, 0)),
        None => {
            let est = estimate_d(split, &dp_config(Backend::DpGaussSeidel, 10_000_000), rng)?;
            Ok((est.d, est.sweeps))
        }
    }
}

struct RunSummary {
    gain: f64,
    policy_gain: Option<f64>,
    iterations: usize,
    work: u64,
    termination: String,
}

fn policy_gain(split: &SplitTask, policy: &Policy) -> Option<f64> {
    exact_policy_eval(split, policy).ok().map(|e| e.gain)
}

fn one_run(split: &SplitTask, s: &Settings, index: usize) -> Result<(Vec<(String, String)>, RunSummary)> {
    let mut rng = run_rng(s.seed, index as u64);
    let (d, setup) = reward_bound(split, s, &mut rng)?;
    let mut files = Vec::new();
    let summary = match &s.method {
        Method::OptimalNudging | Method::AlphaNudging => {
            let rule = match s.method {
                Method::AlphaNudging => GainRule::Alpha(s.gain_alpha),
                _ => GainRule::Optimal,
            };
            let cfg = NudgeConfig::new(solver_config(s), rule, s.eps, s.iters)
                .with_transfer(s.transfer)
                .with_zero_crossing(s.zero_crossing)
                .with_d(d);
            let run = nudging_run(split, &cfg, &mut rng).map_err(|f| {
                anyhow::anyhow!("run {index}: {} after {} iterations", f.source, f.partial.iterations())
            })?;
            files.push((format!("run_{index}.csv"), run_log_csv(&run.records, run.termination)));
            files.push((format!("triangles_{index}.csv"), triangle_trace_csv(&run)));
            RunSummary {
                gain: run.gain,
                policy_gain: run.policy().and_then(|p| policy_gain(split, p)),
                iterations: run.iterations(),
                work: setup + run.setup_samples + run.setup_sweeps + run.iteration_samples() + run.iteration_sweeps(),
                termination: run.termination.map_or(String::new(), |t| t.to_string()),
            }
        }
        Method::SspDp => {
            let mut cfg = SspConfig::new(s.backend, DP_TOL, s.budget);
            cfg.trace = true;
            let run = ssp_dp_run(split, &cfg)?;
            let term = if run.converged { "converged" } else { "budget" };
            files.push((format!("run_{index}.csv"), run_log_csv(&run.records, None)));
            RunSummary {
                gain: run.rho,
                policy_gain: policy_gain(split, &run.policy),
                iterations: run.sweeps as usize,
                work: run.sweeps,
                termination: term.to_string(),
            }
        }
        Method::Baseline(name) => {
            let mut spec = BaselineSpec::by_name(name, d).context("unknown baseline")?;
            if let Some(beta) = s.beta {
                spec.alpha = RateSchedule::Constant(s.alpha);
                spec.beta = Some(RateSchedule::Constant(beta));
            }
            let mut opts = BaselineOptions::new(s.budget, s.epsilon);
            opts.reset_period = s.reset;
            opts.record_every = s.record_every;
            let run = generic_avg_reward_run(split, &spec, &opts, &mut rng)?;
            files.push((format!("run_{index}.csv"), run_log_csv(&run.records, Some(run.termination))));
            RunSummary {
                gain: run.rho,
                policy_gain: policy_gain(split, &run.q_table.greedy_policy()),
                iterations: run.records.len(),
                work: run.records.iter().map(|r| r.samples).sum(),
                termination: run.termination.to_string(),
            }
        }
    };
    Ok((files, summary))
}

fn method_name(m: &Method) -> &str {
    match m {
        Method::OptimalNudging => "optimal-nudging",
        Method::AlphaNudging => "alpha-nudging",
        Method::SspDp => "ssp-dp",
        Method::Baseline(name) => name,
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

fn single_task(split: &SplitTask, s: &Settings) -> Result<Artifacts> {
    let runs: Vec<_> = (0..s.runs)
        .into_par_iter()
        .map(|i| one_run(split, s, i))
        .collect::<Result<_>>()?;
    let method = method_name(&s.method);
    let mut summary = String::from("run,method,gain,policy_gain,iterations,work,termination\n");
    let mut files = Vec::new();
    for (i, (run_files, r)) in runs.iter().enumerate() {
        let _ = writeln!(
            summary,
            "{i},{method},{},{},{},{},{}",
            r.gain,
            opt(r.policy_gain),
            r.iterations,
            r.work,
            r.termination
        );
        files.extend(run_files.iter().cloned());
    }
    let rows = runs.iter().map(|(_, r)| r);
    let gains: Vec<f64> = rows.clone().filter_map(|r| r.policy_gain).collect();
    let _ = writeln!(
        summary,
        "mean,{method},{},{},{},{},",
        mean(rows.clone().map(|r| r.gain)),
        if gains.len() == runs.len() { mean(gains.into_iter()).to_string() } else { String::new() },
        mean(rows.clone().map(|r| r.iterations as f64)),
        mean(rows.map(|r| r.work as f64)),
    );
    files.push(("summary.csv".to_string(), summary));
    Ok(Artifacts { files })
}

/// Sweep counts of one testbed task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCounts {
    pub gain: f64,
    /// None when the coupled iteration diverged or ran out of sweeps.
    pub ssp: Option<u64>,
    /// Optimal nudging with cold starts and no sign-change test.
    pub on: u64,
    /// Optimal nudging with warm starts and the sign-change test.
    pub onts: u64,
    /// Sweeps spent estimating the reward bound, excluded from the counts.
    pub setup: u64,
}

/// Runs the coupled iteration and both nudging variants on one task.
pub fn sweep_counts(split: &SplitTask, backend: Backend, eps: f64, max_sweeps: u64, rng: &mut RunRng) -> Result<SweepCounts> {
    let ssp = ssp_dp_run(split, &SspConfig::new(backend, DP_TOL, max_sweeps))
        .ok()
        .filter(|r| r.converged)
        .map(|r| r.sweeps);
    let dp = dp_config(backend, max_sweeps);
    let est = estimate_d(split, &dp, rng)?;
    // inner solves on slowly mixing tasks are only approximate
    let base = NudgeConfig::new(dp, GainRule::Optimal, eps, 10_000)
        .with_d(est.d)
        .with_mismatch(ValueMismatch::Clamp);
    let on = nudging_run(split, &base.clone().with_zero_crossing(false), rng).map_err(|f| f.source)?;
    let onts = nudging_run(split, &base.with_transfer(true), rng).map_err(|f| f.source)?;
    Ok(SweepCounts {
        gain: onts.gain,
        ssp,
        on: on.setup_sweeps + on.iteration_sweeps(),
        onts: onts.setup_sweeps + onts.iteration_sweeps(),
        setup: est.sweeps,
    })
}

fn bench(kind: TestbedKind, s: &Settings) -> Result<Artifacts> {
    let q = match kind {
        TestbedKind::T1 { q } => q.to_string(),
        TestbedKind::T2 => String::new(),
    };
    let counts: Vec<SweepCounts> = (0..s.runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = run_rng(s.seed, i as u64);
            let split = generate_bertsekas_task(kind, s.n, &mut rng)?;
            sweep_counts(&split, s.backend, s.eps, s.budget, &mut rng)
        })
        .collect::<Result<_>>()?;

    let header = "run,n,q,gain,ssp_sweeps,on_sweeps,onts_sweeps,on_over_ssp,onts_over_ssp,onts_over_on\n";
    let mut runs = String::from(header);
    for (i, c) in counts.iter().enumerate() {
        let ratio = |x: u64| c.ssp.map(|ssp| x as f64 / ssp as f64);
        let _ = writeln!(
            runs,
            "{i},{},{q},{},{},{},{},{},{},{}",
            s.n,
            c.gain,
            c.ssp.map_or(String::new(), |x| x.to_string()),
            c.on,
            c.onts,
            opt(ratio(c.on)),
            opt(ratio(c.onts)),
            c.onts as f64 / c.on as f64
        );
    }
    // SSP columns average over the runs where the coupled iteration converged
    let with_ssp: Vec<&SweepCounts> = counts.iter().filter(|c| c.ssp.is_some()).collect();
    let ssp_mean = |f: &dyn Fn(&SweepCounts) -> f64| {
        (!with_ssp.is_empty()).then(|| mean(with_ssp.iter().map(|c| f(c))))
    };
    let mut summary = String::from(header);
    let _ = writeln!(
        summary,
        "mean,{},{q},{},{},{},{},{},{},{}",
        s.n,
        mean(counts.iter().map(|c| c.gain)),
        opt(ssp_mean(&|c| c.ssp.unwrap_or(0) as f64)),
        mean(counts.iter().map(|c| c.on as f64)),
        mean(counts.iter().map(|c| c.onts as f64)),
        opt(ssp_mean(&|c| c.on as f64 / c.ssp.unwrap_or(1) as f64)),
        opt(ssp_mean(&|c| c.onts as f64 / c.ssp.unwrap_or(1) as f64)),
        mean(counts.iter().map(|c| c.onts as f64 / c.on as f64)),
    );
    Ok(Artifacts {
        files: vec![("runs.csv".into(), runs), ("summary.csv".into(), summary)],
    })
}

fn monte_carlo(s: &Settings) -> Result<Artifacts> {
    let d = s.d.unwrap_or(1.0);
    let chunks = s.runs.min(s.samples);
    let chunk_sizes: Vec<usize> = (0..chunks)
        .map(|i| s.samples / chunks + usize::from(i < s.samples % chunks))
        .collect();
    let parts: Vec<_> = chunk_sizes
        .par_iter()
        .enumerate()
        .map(|(i, &size)| triangle_monte_carlo(size, d, &mut run_rng(s.seed, i as u64)).map(|(v, _)| v))
        .collect::<nudge_core::Result<_>>()?;

    let mut samples = String::from("chunk,initial_uncertainty,ratio,implied_alpha,rejections\n");
    for (i, part) in parts.iter().enumerate() {
        for r in part {
            let _ = writeln!(
                samples,
                "{i},{},{},{},{}",
                r.initial_uncertainty, r.ratio, r.implied_alpha, r.rejections
            );
        }
    }
    let all: Vec<_> = parts.into_iter().flatten().collect();
    let m = MonteCarloSummary::from_samples(&all);
    let summary = format!(
        "samples,rejections,mean_ratio,max_ratio,min_alpha,max_alpha\n{},{},{},{},{},{}\n",
        m.samples, m.rejections, m.mean_ratio, m.max_ratio, m.min_alpha, m.max_alpha
    );
    Ok(Artifacts {
        files: vec![("samples.csv".into(), samples), ("summary.csv".into(), summary)],
    })
}
