use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// A conic `[x y 1] M [x y 1]^T = 0` with symmetric `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conic {
    m: Matrix3<f64>,
}

impl Conic {
    /// Builds a conic from rows; the matrix is symmetrized.
    pub fn new(rows: [[f64; 3]; 3]) -> Self {
        Self::from_matrix(Matrix3::from_fn(|i, j| rows[i][j]))
    }

    pub fn from_matrix(m: Matrix3<f64>) -> Self {
        Self {
            m: (m + m.transpose()) * 0.5,
        }
    }

    /// `a x^2 + b xy + c y^2 + d x + e y + f = 0`.
    pub fn from_coefficients(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Self {
        Self::new([
            [a, b / 2.0, d / 2.0],
            [b / 2.0, c, e / 2.0],
            [d / 2.0, e / 2.0, f],
        ])
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let v = Vector3::new(x, y, 1.0);
        (v.transpose() * self.m * v)[0]
    }

    /// Residual scaled by the matrix and point magnitudes.
    pub fn relative_residual(&self, x: f64, y: f64) -> f64 {
        let norm = self.m.abs().max().max(f64::MIN_POSITIVE);
        self.eval(x, y).abs() / (norm * (1.0 + x * x + y * y))
    }

    fn normalized(&self) -> Matrix3<f64> {
        let norm = self.m.abs().max();
        if norm > 0.0 {
            self.m / norm
        } else {
            self.m
        }
    }
}

/// Real roots of `x^3 + a x^2 + b x + c`, ascending.
fn cubic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let mut roots = if p == 0.0 && q == 0.0 {
        vec![0.0]
    } else if disc > 0.0 {
        let sq = disc.sqrt();
        vec![(-q / 2.0 + sq).cbrt() + (-q / 2.0 - sq).cbrt()]
    } else {
        // three real roots, trigonometric form
        let r = (-p / 3.0).sqrt();
        let cos = (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0);
        let phi = cos.acos();
        (0..3)
            .map(|k| 2.0 * r * ((phi - 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos())
            .collect()
    };
    for t in roots.iter_mut() {
        *t -= shift;
        // Newton polish on the monic cubic
        for _ in 0..3 {
            let f = ((*t + a) * *t + b) * *t + c;
            let df = (3.0 * *t + 2.0 * a) * *t + b;
            if df == 0.0 {
                break;
            }
            let step = f / df;
            if !step.is_finite() {
                break;
            }
            *t -= step;
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}

fn adjugate(c: &Matrix3<f64>) -> Matrix3<f64> {
    let cof = |r0: usize, r1: usize, c0: usize, c1: usize| c[(r0, c0)] * c[(r1, c1)] - c[(r0, c1)] * c[(r1, c0)];
    // adj = transpose of cofactor matrix
    Matrix3::new(
        cof(1, 2, 1, 2),
        -cof(0, 2, 1, 2),
        cof(0, 1, 1, 2),
        -cof(1, 2, 0, 2),
        cof(0, 2, 0, 2),
        -cof(0, 1, 0, 2),
        cof(1, 2, 0, 1),
        -cof(0, 2, 0, 1),
        cof(0, 1, 0, 1),
    )
}

/// Splits a degenerate conic into its (real) lines `g . (x, y, 1) = 0`.
fn split_lines(c: &Matrix3<f64>) -> Option<Vec<Vector3<f64>>> {
    let norm = c.abs().max();
    if norm == 0.0 {
        return None;
    }
    let c = c / norm;
    let adj = adjugate(&c);
    let i = (0..3)
        .max_by(|&x, &y| adj[(x, x)].abs().total_cmp(&adj[(y, y)].abs()))
        .unwrap_or(0);
    let diag = adj[(i, i)];
    if diag.abs() <= 1e-12 {
        // rank one: a double line
        let k = (0..3)
            .max_by(|&x, &y| c[(x, x)].abs().total_cmp(&c[(y, y)].abs()))
            .unwrap_or(0);
        if c[(k, k)] == 0.0 {
            return None;
        }
        let g = c.row(k).transpose() / c[(k, k)].abs().sqrt();
        return Some(vec![g]);
    }
    if diag > 0.0 {
        // complex conjugate pair
        return None;
    }
    let beta = (-diag).sqrt();
    let p = adj.column(i) / beta;
    let skew = Matrix3::new(0.0, p[2], -p[1], -p[2], 0.0, p[0], p[1], -p[0], 0.0);
    let d = c + skew;
    let (mut bi, mut bj, mut best) = (0, 0, 0.0);
    for r in 0..3 {
        for s in 0..3 {
            if d[(r, s)].abs() > best {
                best = d[(r, s)].abs();
                bi = r;
                bj = s;
            }
        }
    }
    if best == 0.0 {
        return None;
    }
    Some(vec![d.row(bi).transpose(), d.column(bj).into_owned()])
}

/// Real points where the line `g` meets the conic `m`.
fn line_conic(g: &Vector3<f64>, m: &Matrix3<f64>) -> Vec<(f64, f64)> {
    let n2 = g[0] * g[0] + g[1] * g[1];
    if n2 == 0.0 {
        return Vec::new();
    }
    let origin = Vector3::new(-g[0] * g[2] / n2, -g[1] * g[2] / n2, 1.0);
    let dir = Vector3::new(-g[1], g[0], 0.0) / n2.sqrt();
    let qa = (dir.transpose() * m * dir)[0];
    let qb = 2.0 * (dir.transpose() * m * origin)[0];
    let qc = (origin.transpose() * m * origin)[0];
    let scale = qa.abs().max(qb.abs()).max(qc.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    let mut ts = Vec::new();
    if qa.abs() <= 1e-14 * scale {
        if qb != 0.0 {
            ts.push(-qc / qb);
        }
    } else {
        let mut disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            if disc > -1e-12 * qb * qb.max(scale * scale) {
                disc = 0.0;
            } else {
                return Vec::new();
            }
        }
        let sq = disc.sqrt();
        // stable quadratic roots
        let k = -0.5 * (qb + qb.signum() * sq);
        if k != 0.0 {
            ts.push(k / qa);
            ts.push(qc / k);
        } else {
            ts.push(0.0);
        }
    }
    ts.into_iter()
        .map(|t| (origin[0] + t * dir[0], origin[1] + t * dir[1]))
        .collect()
}

/// Intersection points of two conics, found through a degenerate member
/// `A - lambda B` of their pencil.
///
/// Every returned point satisfies both conics to a relative residual of
/// `1e-8`. Returns an empty list when the conics do not meet in real points.
pub fn intersect_conics(a: &Conic, b: &Conic) -> Result<Vec<(f64, f64)>> {
    let (mut ma, mut mb) = (a.normalized(), b.normalized());
    if ma.abs().max() == 0.0 || mb.abs().max() == 0.0 {
        return Err(Error::SingularConic);
    }
    // invert the better-conditioned one
    if ma.determinant().abs() > mb.determinant().abs() {
        std::mem::swap(&mut ma, &mut mb);
    }
    let inv = mb.try_inverse().ok_or(Error::SingularConic)?;
    if !inv.iter().all(|x| x.is_finite()) {
        return Err(Error::SingularConic);
    }
    let m = inv * ma;
    // det(m - lambda I) = -(lambda^3 - tr lambda^2 + minors lambda - det)
    let tr = m.trace();
    let minors = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
        + m[(0, 0)] * m[(2, 2)] - m[(0, 2)] * m[(2, 0)]
        + m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)];
    let roots = cubic_roots(-tr, minors, -m.determinant());
    if roots.is_empty() {
        return Err(Error::LineExtraction);
    }

    // most rank-deficient pencil members first
    let mut members: Vec<(f64, Matrix3<f64>)> = roots
        .iter()
        .map(|&lambda| {
            let c = ma - mb * lambda;
            let n = c.abs().max().max(f64::MIN_POSITIVE);
            ((c / n).determinant().abs(), c)
        })
        .collect();
    members.sort_by(|x, y| x.0.total_cmp(&y.0));

    let (ca, cb) = (Conic::from_matrix(ma), Conic::from_matrix(mb));
    let mut split_any = false;
    for (_, c) in &members {
        let Some(lines) = split_lines(c) else {
            continue;
        };
        split_any = true;
        let mut points: Vec<(f64, f64)> = Vec::new();
        for g in &lines {
            for (x, y) in line_conic(g, &ma) {
                if !x.is_finite() || !y.is_finite() {
                    continue;
                }
                if ca.relative_residual(x, y) > 1e-8 || cb.relative_residual(x, y) > 1e-8 {
                    continue;
                }
                let dup = points
                    .iter()
                    .any(|&(px, py)| (px - x).abs() + (py - y).abs() <= 1e-12 * (1.0 + x.abs() + y.abs()));
                if !dup {
                    points.push((x, y));
                }
            }
        }
        if !points.is_empty() {
            return Ok(points);
        }
    }
    if split_any {
        Ok(Vec::new())
    } else {
        Err(Error::LineExtraction)
    }
}
