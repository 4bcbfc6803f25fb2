//! Random valid enclosing triangles and the reduction Monte Carlo.

use rand::Rng;

use super::triangle::EnclosingTriangle;
use super::uncertainty::left_uncertainty_max;
use super::update::optimal_gain_update;
use super::wl::WlPoint;
use crate::error::{Error, Result};

/// A sampled triangle and the number of rejected draws before it.
#[derive(Debug, Clone, Copy)]
pub struct SampledTriangle {
    pub triangle: EnclosingTriangle,
    pub rejections: u64,
}

fn draw<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> Option<f64> {
    (hi > lo).then(|| rng.gen_range(lo..hi))
}

/// Draws a non-degenerate enclosing triangle inside the w-l region of a
/// task with reward bound `d`.
///
/// Coordinates are drawn uniformly in order: `w_B + l_B`, `l_B - w_B`,
/// `w_A + l_A`, `w_C + l_C`, `l_C - w_C`, each within the range left by
/// the earlier draws. Draws violating the enclosing conditions are
/// rejected and counted.
pub fn sample_triangle<R: Rng + ?Sized>(d: f64, rng: &mut R) -> Result<SampledTriangle> {
    if !(d > 0.0) {
        return Err(Error::InvalidArgument(format!("reward bound {d} must be positive")));
    }
    let mut rejections = 0;
    loop {
        if let Some(tri) = try_sample(d, rng) {
            return Ok(SampledTriangle {
                triangle: tri,
                rejections,
            });
        }
        rejections += 1;
    }
}

fn try_sample<R: Rng + ?Sized>(d: f64, rng: &mut R) -> Option<EnclosingTriangle> {
    let sum_b = draw(rng, 0.0, d)?;
    let diff_b = draw(rng, -sum_b, 0.0)?;
    let sum_a = draw(rng, -diff_b, sum_b)?;
    let sum_c = draw(rng, 0.0, d)?;
    let diff_c = draw(rng, -sum_c, diff_b)?;
    let at = |sum: f64, diff: f64| WlPoint::new((sum - diff) / 2.0, (sum + diff) / 2.0);
    let tri = EnclosingTriangle::new_unchecked(at(sum_a, diff_b), at(sum_b, diff_b), at(sum_c, diff_c));
    if tri.validate().is_err() || tri.is_degenerate(d) {
        return None;
    }
    Some(tri)
}

/// Outcome of the optimal update on one sampled triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionSample {
    /// Current interval width `2(Q - P)`.
    pub initial_uncertainty: f64,
    /// Worst-case next width over the current width.
    pub ratio: f64,
    /// Position of the chosen gain inside the interval, in `[0, 1]`.
    pub implied_alpha: f64,
    pub rejections: u64,
}

pub fn reduction_sample<R: Rng + ?Sized>(d: f64, rng: &mut R) -> Result<ReductionSample> {
    let sampled = sample_triangle(d, rng)?;
    let tri = sampled.triangle;
    let rho = optimal_gain_update(&tri)?;
    let worst = left_uncertainty_max(&tri, rho)?;
    let width = tri.interval().width();
    Ok(ReductionSample {
        initial_uncertainty: width,
        ratio: worst / width,
        implied_alpha: (rho / 2.0 - tri.p()) / (tri.q() - tri.p()),
        rejections: sampled.rejections,
    })
}

/// Aggregate of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloSummary {
    pub samples: u64,
    pub rejections: u64,
    pub mean_ratio: f64,
    pub max_ratio: f64,
    pub min_alpha: f64,
    pub max_alpha: f64,
}

impl MonteCarloSummary {
    pub fn from_samples(samples: &[ReductionSample]) -> Self {
        let n = samples.len();
        let mut out = MonteCarloSummary {
            samples: n as u64,
            rejections: 0,
            mean_ratio: 0.0,
            max_ratio: f64::NEG_INFINITY,
            min_alpha: f64::INFINITY,
            max_alpha: f64::NEG_INFINITY,
        };
        for s in samples {
            out.rejections += s.rejections;
            out.mean_ratio += s.ratio;
            out.max_ratio = out.max_ratio.max(s.ratio);
            out.min_alpha = out.min_alpha.min(s.implied_alpha);
            out.max_alpha = out.max_alpha.max(s.implied_alpha);
        }
        if n > 0 {
            out.mean_ratio /= n as f64;
        }
        out
    }
}

/// Runs `n` reduction samples.
pub fn triangle_monte_carlo<R: Rng + ?Sized>(
    n: usize,
    d: f64,
    rng: &mut R,
) -> Result<(Vec<ReductionSample>, MonteCarloSummary)> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let samples = (0..n)
        .map(|_| reduction_sample(d, rng))
        .collect::<Result<Vec<_>>>()?;
    let summary = MonteCarloSummary::from_samples(&samples);
    Ok((samples, summary))
}
