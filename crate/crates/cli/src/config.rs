//! Experiment settings from flags and an optional `key = value` file.
//!
//! Keys in the file are the long flag names. Flags given on the command
//! line override the file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use nudge_core::env::queuing::BusyLayout;
use nudge_core::solvers::Backend;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown setting `{0}`")]
    UnknownKey(String),
    #[error("setting `{key}`: cannot parse `{value}`")]
    Value { key: String, value: String },
    #[error("{0}")]
    Invalid(String),
}

pub const KEYS: &[&str] = &[
    "seed",
    "runs",
    "method",
    "eps",
    "budget",
    "transfer",
    "out",
    "n",
    "q",
    "samples",
    "d",
    "backend",
    "epsilon",
    "alpha",
    "beta",
    "gain-alpha",
    "iters",
    "layout",
    "reset",
    "zero-crossing",
    "record-every",
];

/// Raw settings before defaults are applied.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawSettings(BTreeMap<String, String>);

impl RawSettings {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            let key = key.trim().to_string();
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey(key));
            }
            map.insert(key, value.trim().to_string());
        }
        Ok(Self(map))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: Option<impl ToString>) {
        debug_assert!(KEYS.contains(&key));
        if let Some(v) = value {
            self.0.insert(key.to_string(), v.to_string());
        }
    }

    /// `self` with every key of `over` replaced.
    pub fn overlay(mut self, over: RawSettings) -> Self {
        self.0.extend(over.0);
        self
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.0
            .get(key)
            .map(|v| {
                v.parse().map_err(|_| ConfigError::Value {
                    key: key.to_string(),
                    value: v.clone(),
                })
            })
            .transpose()
    }

    fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.get(key)?.unwrap_or(default))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Queuing,
    BenchT1,
    BenchT2,
    Tracking,
    TriangleMc,
    Solve,
}

/// What a run executes.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    OptimalNudging,
    AlphaNudging,
    /// Coupled value/gain iteration.
    SspDp,
    /// A named average-reward learner.
    Baseline(String),
}

impl FromStr for Method {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "optimal-nudging" => Ok(Method::OptimalNudging),
            "alpha-nudging" => Ok(Method::AlphaNudging),
            "ssp-dp" => Ok(Method::SspDp),
            "r-learning-1" | "r-learning-2" | "singh-3" | "singh-4" | "smart" | "gosavi"
            | "robbins-monro" | "sspq" => Ok(Method::Baseline(s.to_string())),
            _ => Err(()),
        }
    }
}

fn parse_backend(s: &str) -> Option<Backend> {
    match s {
        "q-learning" => Some(Backend::QLearning),
        "jacobi" => Some(Backend::DpJacobi),
        "gauss-seidel" | "dp" => Some(Backend::DpGaussSeidel),
        _ => None,
    }
}

fn parse_layout(s: &str) -> Option<BusyLayout> {
    match s {
        "single" => Some(BusyLayout::Single),
        "per-class" => Some(BusyLayout::PerClass),
        _ => None,
    }
}

/// Fully resolved settings of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub experiment: Experiment,
    pub seed: u64,
    pub runs: usize,
    pub method: Method,
    /// Target width of the gain interval.
    pub eps: f64,
    /// Samples per nudging iteration, sweep cap for dynamic programming, or
    /// steps of a baseline run.
    pub budget: u64,
    pub transfer: bool,
    pub out: Option<PathBuf>,
    pub n: usize,
    pub q: f64,
    pub samples: usize,
    /// Reward bound; estimated by dynamic programming when absent.
    pub d: Option<f64>,
    pub backend: Backend,
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub gain_alpha: f64,
    pub iters: usize,
    pub layout: BusyLayout,
    pub reset: Option<u64>,
    pub zero_crossing: bool,
    pub record_every: u64,
}

impl Settings {
    pub fn resolve(experiment: Experiment, raw: &RawSettings) -> Result<Self, ConfigError> {
        let backend_default = match experiment {
            Experiment::Queuing => "q-learning",
            _ => "gauss-seidel",
        };
        let backend_name: String = raw.get_or("backend", backend_default.to_string())?;
        let backend = parse_backend(&backend_name).ok_or_else(|| ConfigError::Value {
            key: "backend".into(),
            value: backend_name.clone(),
        })?;
        let sampled = backend.is_sampled();

        let method_name: String = raw.get_or("method", "optimal-nudging".to_string())?;
        let method: Method = method_name.parse().map_err(|_| ConfigError::Value {
            key: "method".into(),
            value: method_name.clone(),
        })?;
        let layout_name: String = raw.get_or("layout", "single".to_string())?;
        let layout = parse_layout(&layout_name).ok_or_else(|| ConfigError::Value {
            key: "layout".into(),
            value: layout_name.clone(),
        })?;

        let baseline = matches!(method, Method::Baseline(_));
        let tracking = experiment == Experiment::Tracking;
        let bench = matches!(experiment, Experiment::BenchT1 | Experiment::BenchT2);
        let budget_default = match (baseline, sampled, tracking) {
            _ if bench => 100_000_000,
            (true, _, false) => 5_000_000,
            (true, _, true) => 1_500_000,
            (false, true, false) => 750_000,
            (false, true, true) => 250_000,
            (false, false, _) => 1_000_000,
        };
        let out: Option<String> = raw.get("out")?;
        let s = Settings {
            experiment,
            seed: raw.get_or("seed", 1)?,
            runs: raw.get_or(
                "runs",
                match experiment {
                    Experiment::Solve => 1,
                    Experiment::TriangleMc => 8,
                    _ => 5,
                },
            )?,
            method,
            eps: raw.get_or("eps", if sampled { 1e-3 } else { 1e-6 })?,
            budget: raw.get_or("budget", budget_default)?,
            transfer: raw.get_or("transfer", false)?,
            out: out.map(PathBuf::from),
            n: raw.get_or("n", 20)?,
            q: raw.get_or("q", 0.1)?,
            samples: raw.get_or("samples", 100_000)?,
            d: raw.get::<f64>("d")?,
            backend,
            epsilon: raw.get_or("epsilon", if tracking { 0.5 } else { 0.1 })?,
            alpha: raw.get_or("alpha", if tracking { 0.5 } else { 0.01 })?,
            beta: raw.get("beta")?,
            gain_alpha: raw.get_or("gain-alpha", 0.5)?,
            iters: raw.get_or("iters", if sampled { 6 } else { 100 })?,
            layout,
            reset: match raw.get::<u64>("reset")? {
                Some(0) => None,
                Some(k) => Some(k),
                None => Some(10),
            },
            zero_crossing: raw.get_or("zero-crossing", !(tracking && sampled))?,
            record_every: raw.get_or("record-every", 100_000)?,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Invalid(msg));
        if self.runs == 0 {
            return fail("runs must be positive".into());
        }
        if !(self.eps > 0.0) || self.budget == 0 || self.iters == 0 {
            return fail("eps, budget and iters must be positive".into());
        }
        if self.d.is_some_and(|d| !(d > 0.0)) {
            return fail("d must be positive".into());
        }
        if self.samples == 0 || self.record_every == 0 {
            return fail("samples and record-every must be positive".into());
        }
        let bench = matches!(self.experiment, Experiment::BenchT1 | Experiment::BenchT2);
        if bench && self.backend.is_sampled() {
            return fail("testbed comparisons count sweeps; pick jacobi or gauss-seidel".into());
        }
        if self.method == Method::SspDp && self.backend.is_sampled() {
            return fail("ssp-dp needs a sweep backend".into());
        }
        Ok(())
    }
}
