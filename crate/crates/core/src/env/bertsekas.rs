//! Random single-action testbeds: sparse unstructured (T1) and
//! tridiagonal (T2) transition matrices with rewards drawn from `(0, n)`.

use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::rng::RunRng;
use crate::task::{bertsekas_split, SplitTask, TabularSmdp, Transition};

/// Weight added towards the last state before normalization, so that it is
/// recurrent under every policy.
pub const RECURRENT_WEIGHT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestbedKind {
    /// Each entry is nonzero with probability `q`.
    T1 { q: f64 },
    /// Nonzero entries only to the neighbouring states and the state itself.
    T2,
}

/// Builds a testbed task and splits it at its last state.
pub fn generate_bertsekas_task<R: Rng + ?Sized>(
    kind: TestbedKind,
    n: usize,
    rng: &mut R,
) -> Result<SplitTask> {
    if !(10..=50).contains(&n) {
        return Err(Error::InvalidArgument(format!("testbed size {n} outside [10, 50]")));
    }
    if let TestbedKind::T1 { q } = kind {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::InvalidArgument(format!("density {q} outside (0, 1]")));
        }
    }
    let recurrent = n - 1;
    let mut rows = Vec::with_capacity(n);
    for s in 0..n {
        let reward = rng.gen_range(0.0..n as f64);
        let mut weights = loop {
            let w = row_weights(kind, n, s, rng);
            if w.iter().any(|&x| x > 0.0) {
                break w;
            }
        };
        weights[recurrent] += RECURRENT_WEIGHT;
        let total: f64 = weights.iter().sum();
        let row: Vec<Transition> = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(next, &w)| Transition::new(next, w / total, reward, 1.0))
            .collect();
        rows.push(vec![row]);
    }
    bertsekas_split(&TabularSmdp::new(rows)?, recurrent)
}

fn row_weights<R: Rng + ?Sized>(kind: TestbedKind, n: usize, s: usize, rng: &mut R) -> Vec<f64> {
    let mut w = vec![0.0; n];
    match kind {
        TestbedKind::T1 { q } => {
            for slot in w.iter_mut() {
                if rng.gen::<f64>() < q {
                    *slot = positive_uniform(rng);
                }
            }
        }
        TestbedKind::T2 => {
            for next in s.saturating_sub(1)..=(s + 1).min(n - 1) {
                w[next] = positive_uniform(rng);
            }
        }
    }
    w
}

/// Uniform on the open interval `(0, 1)`.
fn positive_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            return u;
        }
    }
}

/// Testbed task from a seed alone.
pub fn generate_seeded(kind: TestbedKind, n: usize, seed: u64) -> Result<SplitTask> {
    generate_bertsekas_task(kind, n, &mut RunRng::seed_from_u64(seed))
}
