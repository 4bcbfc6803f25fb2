use super::wl::{nudged_value_at, WlPoint};
use crate::error::{Error, Result};

/// Relative tolerance used by the enclosing-triangle validator.
pub const VALIDATE_TOL: f64 = 1e-9;

/// Relative width below which a triangle counts as solved.
pub const DEGENERATE_TOL: f64 = 1e-12;

/// Bounds `[lo, hi]` on the optimal gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainInterval {
    pub lo: f64,
    pub hi: f64,
}

impl GainInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    pub fn is_within(&self, outer: &GainInterval, tol: f64) -> bool {
        self.lo >= outer.lo - tol && self.hi <= outer.hi + tol
    }
}

/// Three w-l points known to enclose the image of a gain-optimal policy.
///
/// `A` and `B` share the lower gain bound `P` (edge AB has unit slope),
/// `C` carries the upper bound `Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnclosingTriangle {
    a: WlPoint,
    b: WlPoint,
    c: WlPoint,
}

impl EnclosingTriangle {
    /// Builds and validates a triangle.
    pub fn new(a: WlPoint, b: WlPoint, c: WlPoint) -> Result<Self> {
        let tri = Self { a, b, c };
        tri.validate()?;
        Ok(tri)
    }

    pub fn new_unchecked(a: WlPoint, b: WlPoint, c: WlPoint) -> Self {
        Self { a, b, c }
    }

    /// A single point, the solved state.
    pub fn point(p: WlPoint) -> Self {
        Self { a: p, b: p, c: p }
    }

    pub fn a(&self) -> WlPoint {
        self.a
    }

    pub fn b(&self) -> WlPoint {
        self.b
    }

    pub fn c(&self) -> WlPoint {
        self.c
    }

    /// Lower half-gain bound.
    pub fn p(&self) -> f64 {
        self.b.one_projection()
    }

    /// Upper half-gain bound.
    pub fn q(&self) -> f64 {
        self.c.one_projection()
    }

    pub fn interval(&self) -> GainInterval {
        GainInterval {
            lo: 2.0 * self.p(),
            hi: 2.0 * self.q(),
        }
    }

    /// Slope of AC.
    pub fn m_gamma(&self) -> f64 {
        (self.c.l - self.a.l) / (self.c.w - self.a.w)
    }

    /// Slope of BC, infinite when BC is vertical.
    pub fn m_beta(&self) -> f64 {
        (self.c.l - self.b.l) / (self.c.w - self.b.w)
    }

    /// Largest coordinate magnitude, the scale for tolerances.
    pub fn scale(&self) -> f64 {
        [self.a, self.b, self.c]
            .iter()
            .flat_map(|p| [p.w.abs(), p.l.abs()])
            .fold(f64::MIN_POSITIVE, f64::max)
    }

    /// True when the gain interval or the whole triangle has collapsed.
    pub fn is_degenerate(&self, d: f64) -> bool {
        let tol = DEGENERATE_TOL * d;
        let spread = self
            .a
            .distance(self.b)
            .max(self.a.distance(self.c))
            .max(self.b.distance(self.c));
        self.q() - self.p() <= tol || spread <= tol
    }

    /// Checks the six enclosing conditions up to a scale-relative tolerance.
    /// Collapsed edges pass the slope conditions.
    pub fn validate(&self) -> Result<()> {
        let tol = VALIDATE_TOL * self.scale();
        let (a, b, c) = (self.a, self.b, self.c);
        let fail = |msg: String| Err(Error::InvalidTriangle(msg));
        if [a, b, c].iter().any(|p| !p.w.is_finite() || !p.l.is_finite()) {
            return fail("non-finite vertex".into());
        }
        if b.w < a.w - tol || b.l < a.l - tol {
            return fail(format!("B {b:?} is not above and right of A {a:?}"));
        }
        if ((b.l - a.l) - (b.w - a.w)).abs() > tol {
            return fail("AB does not have unit slope".into());
        }
        for (name, p) in [("A", a), ("B", b), ("C", c)] {
            if p.w < p.l - tol {
                return fail(format!("{name} has w < l"));
            }
        }
        if self.p() > self.q() + tol {
            return fail(format!("P {} exceeds Q {}", self.p(), self.q()));
        }
        let (mut dw, mut dl) = (c.w - a.w, c.l - a.l);
        if dw < 0.0 {
            dw = -dw;
            dl = -dl;
        }
        if dl < -tol || dl > dw + tol {
            return fail(format!("slope of AC outside [0,1] ({dw}, {dl})"));
        }
        let (dw, dl) = (c.w - b.w, c.l - b.l);
        if dl.abs() < dw.abs() - tol {
            return fail(format!("slope of BC below one in magnitude ({dw}, {dl})"));
        }
        Ok(())
    }
}

/// The triangle `(0,0), (D/2,D/2), (D,0)` enclosing every policy.
pub fn initial_triangle(d: f64) -> Result<EnclosingTriangle> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::InvalidArgument(format!("reward bound {d} must be positive")));
    }
    Ok(EnclosingTriangle {
        a: WlPoint::ORIGIN,
        b: WlPoint::new(d / 2.0, d / 2.0),
        c: WlPoint::new(d, 0.0),
    })
}

/// How `reduce_triangle` treats a value outside the range the triangle can
/// produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueMismatch {
    /// Report [`Error::InconsistentValue`].
    Reject,
    /// Clamp to the nearest attainable value. Meant for noisy estimates.
    Clamp,
}

/// Scale-relative slack before a value outside the triangle's range is
/// rejected.
const VALUE_TOL: f64 = 1e-9;

/// Where the level set of value `h` crosses `x -> y`: the zero of the
/// linear function `d(w - l - rho) - h(w + l)` along the segment.
fn crossing(x: WlPoint, y: WlPoint, rho: f64, h: f64, d: f64) -> WlPoint {
    let f = |p: WlPoint| d * (p.w - p.l - rho) - h * (p.w + p.l);
    let (fx, fy) = (f(x), f(y));
    let t = if fx == fy { 0.0 } else { (fx / (fx - fy)).clamp(0.0, 1.0) };
    x.lerp(y, t)
}

/// Point of segment `x -> y` whose one-projection is `target`.
fn at_projection(x: WlPoint, y: WlPoint, target: f64) -> WlPoint {
    let (px, py) = (x.one_projection(), y.one_projection());
    let t = if py == px { 0.0 } else { ((target - px) / (py - px)).clamp(0.0, 1.0) };
    x.lerp(y, t)
}

/// Shrinks the triangle after observing that the best nudged value at gain
/// `rho` is `v_star`.
///
/// The level set of `v_star` through the pencil vertex cuts the triangle.
/// A positive value keeps the part between the unit-slope line through the
/// cut on AC and the cut itself; a negative value keeps the part below the
/// cut and right of the unit-slope line through its upper end. A zero value
/// leaves a segment of unit slope, a cut through C leaves the point C.
pub fn reduce_triangle(
    tri: &EnclosingTriangle,
    rho: f64,
    v_star: f64,
    d: f64,
) -> Result<EnclosingTriangle> {
    reduce_triangle_with(tri, rho, v_star, d, ValueMismatch::Reject)
}

pub fn reduce_triangle_with(
    tri: &EnclosingTriangle,
    rho: f64,
    v_star: f64,
    d: f64,
    mismatch: ValueMismatch,
) -> Result<EnclosingTriangle> {
    if !(d > 0.0) {
        return Err(Error::InvalidArgument(format!("reward bound {d} must be positive")));
    }
    if !v_star.is_finite() {
        return Err(Error::InconsistentValue(v_star));
    }
    let interval = tri.interval();
    let slack = VALIDATE_TOL * tri.scale();
    if !(rho > interval.lo - slack && rho <= interval.hi + slack) {
        return Err(Error::InvalidArgument(format!(
            "gain {rho} outside ({}, {}]",
            interval.lo, interval.hi
        )));
    }
    let (a, b, c) = (tri.a, tri.b, tri.c);
    let h_lo = nudged_value_at(a, rho, d);
    let h_hi = nudged_value_at(c, rho, d);
    let value_slack = VALUE_TOL * d.max(v_star.abs());
    let h = if v_star > h_hi {
        if mismatch == ValueMismatch::Reject && v_star > h_hi + value_slack {
            return Err(Error::InconsistentValue(v_star));
        }
        h_hi
    } else if v_star < h_lo {
        if mismatch == ValueMismatch::Reject && v_star < h_lo - value_slack {
            return Err(Error::InconsistentValue(v_star));
        }
        h_lo
    } else {
        v_star
    };

    let t = crossing(a, c, rho, h, d);
    let out = if h >= 0.0 {
        let s = crossing(b, c, rho, h, d);
        let top = at_projection(b, c, t.one_projection());
        EnclosingTriangle { a: t, b: top, c: s }
    } else {
        let s = if h <= nudged_value_at(b, rho, d) {
            crossing(a, b, rho, h, d)
        } else {
            crossing(b, c, rho, h, d)
        };
        let low = at_projection(a, c, s.one_projection());
        EnclosingTriangle { a: low, b: s, c: t }
    };
    Ok(out)
}
