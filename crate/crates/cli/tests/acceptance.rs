//! Acceptance suite: runs each criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion. Exits nonzero if any criterion fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nudge_cli::experiments::sweep_counts;
use nudge_core::env::bertsekas::{generate_bertsekas_task, TestbedKind};
use nudge_core::env::queuing::{build_queuing_task, BusyLayout, QueuingParams};
use nudge_core::env::random::{random_positive_gain_task, RandomTaskParams};
use nudge_core::env::tracking::{build_tracking_task, TrackingParams};
use nudge_core::geometry::sampling::{sample_triangle, triangle_monte_carlo};
use nudge_core::geometry::{
    initial_triangle, left_uncertainty_max, nudged_value_at, optimal_gain_update, reduce_triangle,
    right_uncertainty_max, EnclosingTriangle, WlPoint,
};
use nudge_core::nudging::{
    alpha_nudging_run, estimate_d, nudging_run, optimal_nudging_run, GainRule, NudgeConfig, NudgeRun,
};
use nudge_core::record::Termination;
use nudge_core::rng::run_rng;
use nudge_core::schedule::RateSchedule;
use nudge_core::solvers::{Backend, SolverConfig};
use nudge_core::task::io::write_split;
use nudge_core::task::{dinkelbach_gain, exact_policy_eval, gain_optimal_oracle, PolicyIter, SplitTask};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn dp() -> SolverConfig {
    SolverConfig::dp(Backend::DpGaussSeidel, 1e-13, 10_000_000)
}

/// Root of `u_l - u_r` on the gain interval by plain bisection.
fn bisection_root(tri: &EnclosingTriangle, steps: usize) -> f64 {
    let iv = tri.interval();
    let gap = |rho: f64| left_uncertainty_max(tri, rho).unwrap() - right_uncertainty_max(tri, rho).unwrap();
    let (mut lo, mut hi) = (iv.lo, iv.hi);
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if gap(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn geometry_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let (mut worst_root, mut worst_gap) = (0.0_f64, 0.0_f64);
    let mut failures = 0;
    for _ in 0..100_000 {
        let tri = sample_triangle(1.0, &mut rng).unwrap().triangle;
        let Ok(rho) = optimal_gain_update(&tri) else {
            failures += 1;
            continue;
        };
        let root = bisection_root(&tri, 256);
        let gap = (left_uncertainty_max(&tri, rho).unwrap() - right_uncertainty_max(&tri, rho).unwrap()).abs();
        worst_root = worst_root.max((rho - root).abs());
        worst_gap = worst_gap.max(gap);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && worst_root <= 1e-9 && worst_gap <= 1e-9 && secs <= 60.0,
        format!("max |rho - bisection| {worst_root:.2e}, max |u_l - u_r| {worst_gap:.2e}, {failures} errors, {secs:.1}s"),
    )
}

/// A point strictly inside the triangle.
fn interior_point<R: Rng>(tri: &EnclosingTriangle, rng: &mut R) -> WlPoint {
    let (x, y, z): (f64, f64, f64) = (rng.gen_range(0.01..1.0), rng.gen_range(0.01..1.0), rng.gen_range(0.01..1.0));
    let t = x + y + z;
    let (a, b, c) = (tri.a(), tri.b(), tri.c());
    WlPoint::new((x * a.w + y * b.w + z * c.w) / t, (x * a.l + y * b.l + z * c.l) / t)
}

fn reduction_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let d = 1.0;
    let (mut invalid, mut not_shrunk, mut lost) = (0, 0, 0);
    for _ in 0..100_000 {
        let tri = sample_triangle(d, &mut rng).unwrap().triangle;
        let iv = tri.interval();
        let x = interior_point(&tri, &mut rng);
        let rho = rng.gen_range(iv.lo..=iv.hi);
        let v_star = nudged_value_at(x, rho, d);
        let Ok(next) = reduce_triangle(&tri, rho, v_star, d) else {
            invalid += 1;
            continue;
        };
        if next.validate().is_err() {
            invalid += 1;
        }
        if !(next.interval().width() < iv.width()) {
            not_shrunk += 1;
        }
        if !next.interval().contains(2.0 * x.one_projection(), 1e-9) {
            lost += 1;
        }
    }
    outcome(
        invalid + not_shrunk + lost == 0,
        format!("{invalid} invalid, {not_shrunk} not narrower, {lost} losing the policy gain"),
    )
}

fn worked_example() -> Outcome {
    let d = 3.0;
    let tri = initial_triangle(d).unwrap();
    let next = reduce_triangle(&tri, d / 4.0, d / 3.0, d).unwrap();
    let (before, after) = (tri.interval().width(), next.interval().width());
    let err = (after - 5.0 * d / 24.0).abs();
    outcome(
        (before - d).abs() <= 1e-12 && err <= 1e-12,
        format!("uncertainty {before} -> {after}, error {err:.1e}"),
    )
}

fn task_suite() -> Vec<SplitTask> {
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    (0..100)
        .map(|i| {
            let p = RandomTaskParams {
                n_states: 2 + i % 5,
                max_actions: 3,
                ..Default::default()
            };
            random_positive_gain_task(&p, 0.0, &mut rng).unwrap()
        })
        .collect()
}

fn fractional_programming(suite: &[SplitTask]) -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for split in suite {
        let (_, gain) = gain_optimal_oracle(split).unwrap();
        let best = PolicyIter::new(split.task())
            .map(|p| {
                let e = exact_policy_eval(split, &p).unwrap();
                e.value - gain * e.cost
            })
            .fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(best.abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-9 && secs <= 60.0,
        format!("max |max_pi (v - rho* c)| {worst:.2e}, {secs:.1}s"),
    )
}

fn solver_correctness(suite: &[SplitTask]) -> Outcome {
    let eps = 1e-8;
    let mut rng = ChaCha8Rng::seed_from_u64(1005);
    let (mut gain_miss, mut policy_miss, mut over_bound, mut over_alpha) = (0, 0, 0, 0);
    let mut worst = 0.0_f64;
    let (mut total_on, mut total_half) = (0, 0);
    for split in suite {
        let (_, oracle) = gain_optimal_oracle(split).unwrap();
        let run = optimal_nudging_run(split, &dp(), eps, 1000, false, &mut rng).unwrap();
        let half = alpha_nudging_run(split, &dp(), 0.5, eps, 1000, &mut rng).unwrap();
        worst = worst.max((run.gain - oracle).abs());
        if (run.gain - oracle).abs() > 1e-6 {
            gain_miss += 1;
        }
        let policy_gain = run.policy().map(|p| exact_policy_eval(split, p).unwrap().gain);
        if !policy_gain.is_some_and(|g| (g - oracle).abs() <= 1e-9) {
            policy_miss += 1;
        }
        let bound = (run.d / eps).log2().ceil() as usize + 1;
        if run.iterations() > bound {
            over_bound += 1;
        }
        total_on += run.iterations();
        total_half += half.iterations();
        if run.iterations() > half.iterations() {
            over_alpha += 1;
        }
    }
    outcome(
        gain_miss + policy_miss + over_bound + over_alpha == 0,
        format!(
            "max gain error {worst:.1e}; {gain_miss} gain misses, {policy_miss} suboptimal policies, \
             {over_bound} over the log bound, {over_alpha} slower than alpha=0.5 \
             ({total_on} vs {total_half} iterations in total)"
        ),
    )
}

fn zero_crossing_soundness(suite: &[SplitTask]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1006);
    let cfg = NudgeConfig::new(dp(), GainRule::Optimal, 1e-8, 1000);
    let (mut fired, mut false_positive) = (0, 0);
    for split in suite {
        let (_, oracle) = gain_optimal_oracle(split).unwrap();
        let run = nudging_run(split, &cfg, &mut rng).unwrap();
        if run.termination == Some(Termination::ZeroCrossing) {
            fired += 1;
            let g = exact_policy_eval(split, run.policy().unwrap()).unwrap().gain;
            if (g - oracle).abs() > 1e-9 {
                false_positive += 1;
            }
        }
    }
    outcome(
        false_positive == 0,
        format!("{fired} zero-crossing stops, {false_positive} false positives"),
    )
}

/// Iterations until the tested gain is within `tol` of `target`.
fn iterations_to(run: &NudgeRun, target: f64, tol: f64) -> Option<usize> {
    run.records
        .iter()
        .position(|r| (r.rho - target).abs() <= tol * target)
        .map(|i| i + 1)
}

fn queuing_reproduction() -> Outcome {
    let single = build_queuing_task(&QueuingParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1007);
    let dp_gain = optimal_nudging_run(&single, &dp(), 1e-9, 1000, false, &mut rng).unwrap().gain;

    let per_class = build_queuing_task(&QueuingParams {
        layout: BusyLayout::PerClass,
        ..Default::default()
    })
    .unwrap();
    let d = estimate_d(&per_class, &dp(), &mut rng).unwrap().d;

    let solver = SolverConfig::q_learning(RateSchedule::Constant(0.01), 0.1, 750_000).with_reset_period(10);
    let cfg = NudgeConfig::new(solver, GainRule::Optimal, 1e-6, 6).with_d(d);
    let mut counts: Vec<usize> = (0..5)
        .map(|seed| {
            let run = nudging_run(&per_class, &cfg, &mut run_rng(1007, seed)).unwrap();
            iterations_to(&run, 3.28, 0.05).unwrap_or(usize::MAX)
        })
        .collect();
    counts.sort_unstable();
    let median = counts[2];
    let shown: Vec<String> = counts
        .iter()
        .map(|&c| if c == usize::MAX { "never".into() } else { c.to_string() })
        .collect();
    outcome(
        (dp_gain - 3.28).abs() <= 0.01 && (d - 151.7715).abs() <= 0.01 && median <= 6,
        format!("DP gain {dp_gain:.6}, D {d:.4}, iterations to 5% per seed [{}]", shown.join(", ")),
    )
}

fn monte_carlo() -> Outcome {
    let start = Instant::now();
    let (samples, summary) = triangle_monte_carlo(100_000, 1.0, &mut ChaCha8Rng::seed_from_u64(1008)).unwrap();
    let all_half = samples.iter().all(|s| s.ratio <= 0.5);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        all_half && summary.mean_ratio <= 0.30 && summary.min_alpha >= 0.05 && secs <= 120.0,
        format!(
            "max ratio {:.4}, mean ratio {:.4}, min alpha {:.4}, {secs:.1}s",
            summary.max_ratio, summary.mean_ratio, summary.min_alpha
        ),
    )
}

fn testbed_trend() -> Outcome {
    let cells = [
        (TestbedKind::T1 { q: 0.1 }, 10),
        (TestbedKind::T1 { q: 0.5 }, 10),
        (TestbedKind::T1 { q: 0.1 }, 30),
        (TestbedKind::T1 { q: 0.5 }, 30),
        (TestbedKind::T2, 10),
        (TestbedKind::T2, 40),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (cell, (kind, n)) in cells.into_iter().enumerate() {
        let (mut on, mut onts, mut ratio) = (0.0, 0.0, 0.0);
        for run in 0..5 {
            let mut rng = run_rng(1009 + cell as u64, run);
            let split = generate_bertsekas_task(kind, n, &mut rng).unwrap();
            let c = sweep_counts(&split, Backend::DpGaussSeidel, 1e-6, 100_000_000, &mut rng).unwrap();
            on += c.on as f64 / 5.0;
            onts += c.onts as f64 / 5.0;
            ratio += c.onts as f64 / c.on as f64 / 5.0;
        }
        pass &= onts < on && ratio <= 0.5;
        let name = match kind {
            TestbedKind::T1 { q } => format!("T1 n={n} q={q}"),
            TestbedKind::T2 => format!("T2 n={n}"),
        };
        parts.push(format!("{name}: ON {on:.0}, ONTS {onts:.0}, ONTS/ON {ratio:.3}"));
    }
    outcome(pass, parts.join("; "))
}

fn tracking() -> Outcome {
    let split = build_tracking_task(&TrackingParams::default()).unwrap();
    let (_, gain) = dinkelbach_gain(&split, 0.0, 100).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let run = optimal_nudging_run(&split, &dp(), 1e-9, 8, false, &mut rng).unwrap();
    let iv = run.interval();
    let mid_err = (iv.midpoint() - gain).abs() / gain;
    outcome(
        iv.contains(gain, 1e-9) && mid_err <= 0.02 && run.iterations() <= 8,
        format!(
            "exact gain {gain:.6}, interval [{:.6}, {:.6}] after {} iterations, midpoint error {mid_err:.1e}",
            iv.lo,
            iv.hi,
            run.iterations()
        ),
    )
}

fn cli_run(args: &[&str], out: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_nudge"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&status.stderr)));
    }
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(out)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    Ok(files)
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("nudge-acceptance-{}", std::process::id()));
    let task_path = dir.join("task.txt");
    std::fs::create_dir_all(&dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1011);
    let task = random_positive_gain_task(&RandomTaskParams::default(), 0.0, &mut rng).unwrap();
    std::fs::write(&task_path, write_split(&task)).unwrap();
    let task_arg = task_path.to_string_lossy().into_owned();

    let experiments: Vec<Vec<&str>> = vec![
        vec!["queuing", "--runs", "3", "--budget", "50000", "--iters", "3"],
        vec!["queuing", "--method", "r-learning-2", "--runs", "2", "--budget", "200000"],
        vec!["bench-t1", "--n", "10", "--q", "0.5", "--runs", "3"],
        vec!["bench-t2", "--n", "10", "--runs", "3"],
        vec!["tracking", "--runs", "2"],
        vec!["tracking", "--backend", "q-learning", "--budget", "20000", "--runs", "2", "--iters", "2"],
        vec!["triangle-mc", "--samples", "5000"],
        vec!["solve", task_arg.as_str(), "--method", "ssp-dp"],
        vec!["solve", task_arg.as_str()],
    ];
    let mut mismatched = Vec::new();
    let mut errors = Vec::new();
    for (i, args) in experiments.iter().enumerate() {
        let mut full = args.clone();
        full.extend(["--seed", "7"]);
        let first = cli_run(&full, &dir.join(format!("{i}-a")));
        let second = cli_run(&full, &dir.join(format!("{i}-b")));
        match (first, second) {
            (Ok(a), Ok(b)) if a == b && !a.is_empty() => {}
            (Ok(_), Ok(_)) => mismatched.push(args[0]),
            (Err(e), _) | (_, Err(e)) => errors.push(e),
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    outcome(
        mismatched.is_empty() && errors.is_empty(),
        format!(
            "{} experiments, differing: {mismatched:?}, errors: {errors:?}",
            experiments.len()
        ),
    )
}

fn main() -> ExitCode {
    let suite = task_suite();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("geometry oracle equivalence", Box::new(geometry_oracle)),
        ("reduction soundness", Box::new(reduction_soundness)),
        ("worked reduction example", Box::new(worked_example)),
        ("fractional programming property", Box::new(|| fractional_programming(&suite))),
        ("solver correctness", Box::new(|| solver_correctness(&suite))),
        ("zero-crossing soundness", Box::new(|| zero_crossing_soundness(&suite))),
        ("queuing reproduction", Box::new(queuing_reproduction)),
        ("triangle Monte Carlo", Box::new(monte_carlo)),
        ("testbed sweep trend", Box::new(testbed_trend)),
        ("tracking", Box::new(tracking)),
        ("CLI determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {name}: {} ({})",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
