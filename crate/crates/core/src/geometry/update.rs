use super::conic::intersect_conics;
use super::triangle::EnclosingTriangle;
use super::uncertainty::{balance, uncertainty_conics};
use crate::error::{Error, Result};

/// Iteration cap for the bisection fallback.
pub const BISECTION_STEPS: usize = 256;

/// How a gain update was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateRoute {
    Conic,
    Bisection,
}

/// Root of `u_l(rho) = u_r(rho)` by bisection over the gain interval.
pub fn bisect_gain(tri: &EnclosingTriangle, steps: usize) -> Result<f64> {
    if tri.q() - tri.p() <= super::triangle::DEGENERATE_TOL * tri.scale() {
        return Err(Error::DegenerateTriangle);
    }
    let interval = tri.interval();
    let (mut lo, mut hi) = (interval.lo, interval.hi);
    let (g_lo, g_hi) = (balance(tri, lo)?, balance(tri, hi)?);
    if g_lo > 0.0 || g_hi < 0.0 {
        return Err(Error::NoGainRoot);
    }
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if balance(tri, mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The gain that minimizes the worst-case width of the next interval,
/// with the route that produced it.
pub fn optimal_gain_update_route(tri: &EnclosingTriangle) -> Result<(f64, UpdateRoute)> {
    let interval = tri.interval();
    let width = interval.width();
    if tri.q() - tri.p() <= super::triangle::DEGENERATE_TOL * tri.scale() {
        return Err(Error::DegenerateTriangle);
    }
    if let Some(rho) = conic_candidate(tri, width) {
        return Ok((rho, UpdateRoute::Conic));
    }
    bisect_gain(tri, BISECTION_STEPS).map(|rho| (rho, UpdateRoute::Bisection))
}

/// Minmax gain update: the gain inside `(2P, 2Q]` where the left and right
/// worst-case uncertainties balance.
pub fn optimal_gain_update(tri: &EnclosingTriangle) -> Result<f64> {
    optimal_gain_update_route(tri).map(|(rho, _)| rho)
}

fn conic_candidate(tri: &EnclosingTriangle, width: f64) -> Option<f64> {
    let interval = tri.interval();
    let (left, right) = uncertainty_conics(tri).ok()?;
    let points = intersect_conics(&left, &right).ok()?;
    let slack = 1e-12 * width.max(interval.hi.abs());
    let mut best: Option<(f64, f64)> = None;
    for (rho, u) in points {
        if !(rho > interval.lo && rho <= interval.hi + slack) || u < -slack {
            continue;
        }
        let rho = rho.min(interval.hi);
        let Ok(g) = balance(tri, rho) else {
            continue;
        };
        let err = g.abs();
        if err > 1e-9 * width {
            continue;
        }
        let better = match best {
            None => true,
            Some((r, e)) => err < e || (err == e && rho < r),
        };
        if better {
            best = Some((rho, err));
        }
    }
    best.map(|(rho, _)| rho)
}

/// Gain at fraction `alpha` of the way from the lower to the upper bound.
pub fn alpha_gain_update(tri: &EnclosingTriangle, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1]")));
    }
    Ok(2.0 * ((1.0 - alpha) * tri.p() + alpha * tri.q()))
}
