use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nudge_cli::config::{ConfigError, Experiment, RawSettings, Settings};
use nudge_cli::experiments;

#[derive(Parser)]
#[command(name = "nudge", version, about = "Gain-optimal SMDP experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Access-control queuing task.
    Queuing(RunArgs),
    /// Sparse random single-action testbed: sweeps of SSP, ON and ONTS.
    BenchT1(RunArgs),
    /// Tridiagonal random single-action testbed.
    BenchT2(RunArgs),
    /// Grid target tracking.
    Tracking(RunArgs),
    /// Reduction ratios of the optimal update on random triangles.
    TriangleMc(RunArgs),
    /// Any split task from a task file.
    Solve {
        task: PathBuf,
        #[command(flatten)]
        args: RunArgs,
    },
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// `key = value` file with any of the long flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    /// optimal-nudging, alpha-nudging, ssp-dp or a baseline name.
    #[arg(long)]
    method: Option<String>,
    /// Target width of the gain interval.
    #[arg(long)]
    eps: Option<f64>,
    /// Samples per iteration, sweep cap, or baseline steps.
    #[arg(long, visible_alias = "samples-per-iter")]
    budget: Option<u64>,
    /// Warm-start each nudging solve from the previous one.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    transfer: Option<bool>,
    /// Directory for the CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Testbed size.
    #[arg(long)]
    n: Option<usize>,
    /// Testbed density.
    #[arg(long)]
    q: Option<f64>,
    /// Monte Carlo triangles.
    #[arg(long)]
    samples: Option<usize>,
    /// Reward bound; estimated when absent.
    #[arg(long)]
    d: Option<f64>,
    /// q-learning, jacobi or gauss-seidel.
    #[arg(long)]
    backend: Option<String>,
    /// Exploration probability.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Learning rate.
    #[arg(long)]
    alpha: Option<f64>,
    /// Constant gain step of a baseline; also makes `alpha` its learning rate.
    #[arg(long)]
    beta: Option<f64>,
    /// Interval fraction of alpha-nudging.
    #[arg(long)]
    gain_alpha: Option<f64>,
    /// Nudging iteration cap.
    #[arg(long)]
    iters: Option<usize>,
    /// Queuing all-busy layout: single or per-class.
    #[arg(long)]
    layout: Option<String>,
    /// Steps between random restarts; 0 disables.
    #[arg(long)]
    reset: Option<u64>,
    /// Stop nudging on the sign-change test.
    #[arg(long)]
    zero_crossing: Option<bool>,
    /// Baseline steps per log row.
    #[arg(long)]
    record_every: Option<u64>,
}

impl RunArgs {
    fn raw(&self) -> RawSettings {
        let mut r = RawSettings::default();
        r.set("seed", self.seed);
        r.set("runs", self.runs);
        r.set("method", self.method.as_ref());
        r.set("eps", self.eps);
        r.set("budget", self.budget);
        r.set("transfer", self.transfer);
        r.set("out", self.out.as_ref().map(|p| p.display()));
        r.set("n", self.n);
        r.set("q", self.q);
        r.set("samples", self.samples);
        r.set("d", self.d);
        r.set("backend", self.backend.as_ref());
        r.set("epsilon", self.epsilon);
        r.set("alpha", self.alpha);
        r.set("beta", self.beta);
        r.set("gain-alpha", self.gain_alpha);
        r.set("iters", self.iters);
        r.set("layout", self.layout.as_ref());
        r.set("reset", self.reset);
        r.set("zero-crossing", self.zero_crossing);
        r.set("record-every", self.record_every);
        r
    }

    fn settings(&self, experiment: Experiment) -> Result<Settings, ConfigError> {
        let file = match &self.config {
            Some(path) => RawSettings::load(path)?,
            None => RawSettings::default(),
        };
        Settings::resolve(experiment, &file.overlay(self.raw()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args, task) = match &cli.command {
        Command::Queuing(a) => (Experiment::Queuing, a, None),
        Command::BenchT1(a) => (Experiment::BenchT1, a, None),
        Command::BenchT2(a) => (Experiment::BenchT2, a, None),
        Command::Tracking(a) => (Experiment::Tracking, a, None),
        Command::TriangleMc(a) => (Experiment::TriangleMc, a, None),
        Command::Solve { task, args } => (Experiment::Solve, args, Some(task.as_path())),
    };
    let settings = match args.settings(experiment) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = experiments::run_experiment(&settings, task).and_then(|art| {
        if let Some(dir) = &settings.out {
            art.write_to(dir)?;
        }
        Ok(art)
    });
    match result {
        Ok(art) => {
            print!("{}", art.summary());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
