//! Plain-text task files.
//!
//! ```text
//! smdp 3
//! # s a s' p r k
//! 0 0 1 1 2.5 1
//! 1 0 2 1 0 1
//! 2 0 2 1 0 0
//! split 0 2
//! ```
//!
//! Blank lines and `#` comments are ignored. Action indices of a state
//! must be contiguous from zero.

use std::fmt::Write as _;

use super::model::{TabularSmdp, Transition};
use super::split::SplitTask;
use crate::error::{Error, Result};

/// Contents of a task file.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskFile {
    pub task: TabularSmdp,
    pub split: Option<(usize, usize)>,
}

impl TaskFile {
    /// The split task, if the file declared one.
    pub fn into_split(self) -> Result<SplitTask> {
        match self.split {
            Some((initial, terminal)) => SplitTask::new(self.task, initial, terminal),
            None => Err(Error::InvalidTask("task file has no split line".into())),
        }
    }
}

pub fn write_task(task: &TabularSmdp, split: Option<(usize, usize)>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "smdp {}", task.n_states());
    for (s, actions) in task.rows().iter().enumerate() {
        for (a, row) in actions.iter().enumerate() {
            for t in row {
                let _ = writeln!(
                    out,
                    "{s} {a} {} {} {} {}",
                    t.next, t.prob, t.reward, t.cost
                );
            }
        }
    }
    if let Some((i, t)) = split {
        let _ = writeln!(out, "split {i} {t}");
    }
    out
}

pub fn write_split(split: &SplitTask) -> String {
    write_task(split.task(), Some((split.initial(), split.terminal())))
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad {what} `{tok}`"),
    })
}

pub fn parse_task(text: &str) -> Result<TaskFile> {
    let mut rows: Option<Vec<Vec<Vec<Transition>>>> = None;
    let mut split = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut toks = content.split_whitespace();
        let head = toks.next().unwrap_or("");
        match head {
            "smdp" => {
                if rows.is_some() {
                    return Err(Error::Parse {
                        line,
                        msg: "duplicate header".into(),
                    });
                }
                let n: usize = field(toks.next(), line, "state count")?;
                rows = Some(vec![Vec::new(); n]);
            }
            "split" => {
                let initial: usize = field(toks.next(), line, "initial state")?;
                let terminal: usize = field(toks.next(), line, "terminal state")?;
                split = Some((initial, terminal));
            }
            _ => {
                let rows = rows.as_mut().ok_or(Error::Parse {
                    line,
                    msg: "transition before `smdp` header".into(),
                })?;
                let s: usize = field(Some(head), line, "state")?;
                let a: usize = field(toks.next(), line, "action")?;
                let next: usize = field(toks.next(), line, "next state")?;
                let prob: f64 = field(toks.next(), line, "probability")?;
                let reward: f64 = field(toks.next(), line, "reward")?;
                let cost: f64 = field(toks.next(), line, "cost")?;
                if toks.next().is_some() {
                    return Err(Error::Parse {
                        line,
                        msg: "trailing fields".into(),
                    });
                }
                let n = rows.len();
                if s >= n {
                    return Err(Error::Parse {
                        line,
                        msg: format!("state {s} out of range"),
                    });
                }
                let actions = &mut rows[s];
                if actions.len() <= a {
                    actions.resize(a + 1, Vec::new());
                }
                actions[a].push(Transition::new(next, prob, reward, cost));
            }
        }
    }
    let rows = rows.ok_or(Error::Parse {
        line: 0,
        msg: "missing `smdp` header".into(),
    })?;
    Ok(TaskFile {
        task: TabularSmdp::new(rows)?,
        split,
    })
}
