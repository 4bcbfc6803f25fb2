use crate::error::{Error, Result};

/// Relative slack allowed on the mapping preconditions.
const MAP_TOL: f64 = 1e-12;

/// A policy's image in w-l space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WlPoint {
    pub w: f64,
    pub l: f64,
}

impl WlPoint {
    pub const ORIGIN: WlPoint = WlPoint { w: 0.0, l: 0.0 };

    pub fn new(w: f64, l: f64) -> Self {
        Self { w, l }
    }

    /// Projection along unit slope, `(w - l) / 2`: half the gain of the point.
    pub fn one_projection(self) -> f64 {
        (self.w - self.l) / 2.0
    }

    pub fn lerp(self, other: WlPoint, t: f64) -> WlPoint {
        WlPoint {
            w: self.w + t * (other.w - self.w),
            l: self.l + t * (other.l - self.l),
        }
    }

    pub fn distance(self, other: WlPoint) -> f64 {
        (self.w - other.w).hypot(self.l - other.l)
    }
}

/// Maps a policy's episode value and cost to w-l space.
pub fn map_to_wl(value: f64, cost: f64, d: f64) -> Result<WlPoint> {
    if !(d > 0.0) {
        return Err(Error::InvalidArgument(format!("reward bound {d} must be positive")));
    }
    if !value.is_finite() || value.abs() > d * (1.0 + MAP_TOL) {
        return Err(Error::InvalidArgument(format!(
            "value {value} exceeds the reward bound {d}"
        )));
    }
    if !(cost >= 1.0 - MAP_TOL) {
        return Err(Error::InvalidArgument(format!("cost {cost} is below one")));
    }
    Ok(WlPoint {
        w: (d + value) / (2.0 * cost),
        l: (d - value) / (2.0 * cost),
    })
}

/// Recovers `(value, cost)` from a w-l point.
pub fn wl_inverse(p: WlPoint, d: f64) -> Result<(f64, f64)> {
    let sum = p.w + p.l;
    if !(sum > 0.0) {
        return Err(Error::InvalidArgument(
            "the origin has no value/cost preimage".into(),
        ));
    }
    Ok((d * (p.w - p.l) / sum, d / sum))
}

/// Nudged value `v - rho*c` of the policy imaged at `p`.
///
/// Tends to minus infinity at the origin for positive `rho`.
pub fn nudged_value_at(p: WlPoint, rho: f64, d: f64) -> f64 {
    let sum = p.w + p.l;
    let num = d * (p.w - p.l - rho);
    if sum > 0.0 {
        num / sum
    } else if num < 0.0 {
        f64::NEG_INFINITY
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// A line `l = slope * w + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
}

impl Line {
    pub fn at(&self, w: f64) -> f64 {
        self.slope * w + self.intercept
    }
}

/// Level set of nudged value `h` at gain `rho`. Every such line passes
/// through the pencil vertex `(rho/2, -rho/2)`.
pub fn nudged_level_set(rho: f64, h: f64, d: f64) -> Result<Line> {
    if !(d > 0.0) {
        return Err(Error::InvalidArgument(format!("reward bound {d} must be positive")));
    }
    if !(h > -d) {
        return Err(Error::InvalidArgument(format!(
            "level set for h = {h} is vertical or undefined"
        )));
    }
    Ok(Line {
        slope: (d - h) / (d + h),
        intercept: -d * rho / (d + h),
    })
}

/// Pencil vertex shared by all level sets at gain `rho`.
pub fn pencil_vertex(rho: f64) -> WlPoint {
    WlPoint::new(rho / 2.0, -rho / 2.0)
}

/// Projection of `p` onto the w axis along slope `m`:
/// `(m*w - l) / (m + 1)`, or `w` for infinite `m`.
pub fn slope_projection(p: WlPoint, m: f64) -> Result<f64> {
    if m.is_infinite() {
        return Ok(p.w);
    }
    if m == -1.0 || m.is_nan() {
        return Err(Error::InvalidArgument(format!("no projection along slope {m}")));
    }
    Ok((m * p.w - p.l) / (m + 1.0))
}

/// Projection along the direction `(dw, dl)`; division-free in the slope.
pub(crate) fn project_along(p: WlPoint, dw: f64, dl: f64) -> f64 {
    (dl * p.w - dw * p.l) / (dl + dw)
}
