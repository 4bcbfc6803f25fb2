//! Worst-case width of the next gain interval as a function of the gain
//! chosen inside the current one, measured in gain units.

use super::conic::Conic;
use super::triangle::EnclosingTriangle;
use super::wl::project_along;
use crate::error::{Error, Result};

/// Relative slack on the gain range and on radicands.
const RANGE_TOL: f64 = 1e-12;

/// Shape constants of a triangle shared by both uncertainty curves.
///
/// The BC direction is kept as `(dw, dl)` with `dw >= 0`, and the primed
/// constants are the usual slope constants multiplied by `dw`, so that a
/// vertical BC needs no special case.
#[derive(Debug, Clone, Copy)]
struct Shape {
    b1: f64,
    c1: f64,
    /// B and C projected along AC.
    b_gamma: f64,
    c_gamma: f64,
    /// `1 - m_gamma`, `1 + m_gamma`.
    c: f64,
    d: f64,
    /// `dw - dl`, `dw + dl`, `m_gamma dw - dl` for the BC direction.
    a_p: f64,
    b_p: f64,
    e_p: f64,
    /// `(1 + m_beta) C_beta` scaled by `dw`; finite even when `m_beta = -1`.
    k_beta: f64,
}

impl Shape {
    fn of(tri: &EnclosingTriangle) -> Self {
        let (a, b, c) = (tri.a(), tri.b(), tri.c());
        let (gw, gl) = (c.w - a.w, c.l - a.l);
        let m_gamma = gl / gw;
        let (mut dw, mut dl) = (c.w - b.w, c.l - b.l);
        if dw < 0.0 || (dw == 0.0 && dl < 0.0) {
            dw = -dw;
            dl = -dl;
        }
        Self {
            b1: b.one_projection(),
            c1: c.one_projection(),
            b_gamma: project_along(b, gw, gl),
            c_gamma: project_along(c, gw, gl),
            c: 1.0 - m_gamma,
            d: 1.0 + m_gamma,
            a_p: dw - dl,
            b_p: dw + dl,
            e_p: m_gamma * dw - dl,
            k_beta: dl * c.w - dw * c.l,
        }
    }

    fn check_range(&self, rho: f64) -> Result<f64> {
        let x = rho / 2.0;
        let slack = RANGE_TOL * (self.b1.abs() + self.c1.abs()).max(f64::MIN_POSITIVE);
        if !(x >= self.b1 - slack && x <= self.c1 + slack) {
            return Err(Error::InvalidArgument(format!(
                "gain {rho} outside [{}, {}]",
                2.0 * self.b1,
                2.0 * self.c1
            )));
        }
        Ok(x.clamp(self.b1, self.c1))
    }

    fn left(&self, x: f64) -> f64 {
        2.0 * (x - self.b1) * (self.c_gamma - self.b_gamma) / (x - self.b_gamma)
    }

    /// Radicands of the right curve, signed so both are nonnegative on
    /// valid triangles.
    fn radicands(&self, x: f64) -> (f64, f64) {
        let sign = self.e_p.signum();
        (
            sign * self.a_p * self.d * (x - self.c_gamma),
            sign * self.c * (self.b_p * x - self.k_beta),
        )
    }

    fn right(&self, x: f64) -> Result<f64> {
        let (p, q) = self.radicands(x);
        let slack = RANGE_TOL * (p.abs() + q.abs()).max(f64::MIN_POSITIVE).max(self.e_p.abs());
        if p < -slack || q < -slack {
            return Err(Error::InvalidTriangle(format!(
                "negative radicand in right uncertainty ({p}, {q})"
            )));
        }
        let diff = p.max(0.0).sqrt() - q.max(0.0).sqrt();
        Ok(diff * diff / self.e_p.abs())
    }

    fn right_expanded(&self, x: f64) -> f64 {
        let s = -self.e_p.signum();
        let p = self.a_p * self.d * (x - self.c_gamma);
        let q = self.c * (self.b_p * x - self.k_beta);
        (2.0 * s * (p * q).max(0.0).sqrt() + p + q) / self.e_p
    }
}

fn require_proper(tri: &EnclosingTriangle) -> Result<()> {
    let scale = tri.scale();
    if tri.q() - tri.p() <= super::triangle::DEGENERATE_TOL * scale {
        return Err(Error::DegenerateTriangle);
    }
    Ok(())
}

/// Largest interval width left after choosing `rho` when the next value
/// turns out negative. Zero at the lower bound, nondecreasing in `rho`.
pub fn left_uncertainty_max(tri: &EnclosingTriangle, rho: f64) -> Result<f64> {
    require_proper(tri)?;
    let shape = Shape::of(tri);
    let x = shape.check_range(rho)?;
    Ok(shape.left(x))
}

/// Largest interval width left after choosing `rho` when the next value
/// turns out positive. Zero at the upper bound, nonincreasing in `rho`.
pub fn right_uncertainty_max(tri: &EnclosingTriangle, rho: f64) -> Result<f64> {
    require_proper(tri)?;
    let shape = Shape::of(tri);
    let x = shape.check_range(rho)?;
    shape.right(x)
}

/// The right curve written as a signed root plus two linear terms over the
/// slope difference. Algebraically equal to [`right_uncertainty_max`].
pub fn right_uncertainty_expanded(tri: &EnclosingTriangle, rho: f64) -> Result<f64> {
    require_proper(tri)?;
    let shape = Shape::of(tri);
    let x = shape.check_range(rho)?;
    Ok(shape.right_expanded(x))
}

/// Homogeneous forms of both curves in coordinates `(rho, u, 1)`.
///
/// Left: `rho u - 2 B_g u - 2 (C_g - B_g) rho + 4 B_1 (C_g - B_g) = 0`.
/// Right: `e^2 u^2 - 2 e u (p + q) + (p - q)^2 = 0` with `p`, `q` the
/// (unsigned) radicands, both linear in `rho`.
pub fn uncertainty_conics(tri: &EnclosingTriangle) -> Result<(Conic, Conic)> {
    require_proper(tri)?;
    let s = Shape::of(tri);
    let spread = s.c_gamma - s.b_gamma;
    let left = Conic::new([
        [0.0, 0.5, -spread],
        [0.5, 0.0, -s.b_gamma],
        [-spread, -s.b_gamma, 4.0 * s.b1 * spread],
    ]);

    // p = a d (rho/2 - C_g), q = c (b rho/2 - K)
    let (ad, cb) = (s.a_p * s.d, s.c * s.b_p);
    let sum1 = 0.5 * (ad + cb);
    let sum0 = -(ad * s.c_gamma + s.c * s.k_beta);
    let dif1 = 0.5 * (ad - cb);
    let dif0 = -ad * s.c_gamma + s.c * s.k_beta;
    let e = s.e_p;
    let right = Conic::new([
        [dif1 * dif1, -e * sum1, dif1 * dif0],
        [-e * sum1, e * e, -e * sum0],
        [dif1 * dif0, -e * sum0, dif0 * dif0],
    ]);
    Ok((left, right))
}

/// `u_l - u_r` at `rho`; negative at the lower bound, positive at the upper.
pub(crate) fn balance(tri: &EnclosingTriangle, rho: f64) -> Result<f64> {
    Ok(left_uncertainty_max(tri, rho)? - right_uncertainty_max(tri, rho)?)
}
