//! Homogeneous point and line algebra in the image plane.
//!
//! Lines are stored as unit-normal coefficient triples `(m, n, l)` of
//! `m x + n y + l = 0` with a deterministic sign, so a line built from two
//! points does not depend on the order of those points.

use crate::error::{GeomError, Result};

/// Minimum separation of the two points defining a line.
pub const EPS_DEGENERATE: f64 = 1e-9;

/// Threshold on the 2x2 cross term below which two lines count as parallel.
pub const EPS_PARALLEL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn translate(self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// A line `m x + n y + l = 0` with `m^2 + n^2 = 1` and the first nonzero of
/// `(m, n)` positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line2H {
    pub m: f64,
    pub n: f64,
    pub l: f64,
}

impl Line2H {
    /// Builds a canonical line from raw coefficients.
    pub fn from_coefficients(m: f64, n: f64, l: f64) -> Result<Self> {
        let norm = m.hypot(n);
        if !(norm > 0.0) || !l.is_finite() {
            return Err(GeomError::InvalidInput(format!(
                "line coefficients ({m}, {n}, {l}) do not define a line"
            )));
        }
        let s = canonical_sign(m, n) / norm;
        Ok(Self {
            m: s * m,
            n: s * n,
            l: s * l,
        })
    }

    pub fn coefficients(&self) -> [f64; 3] {
        [self.m, self.n, self.l]
    }

    /// Signed distance of `p` from the line.
    pub fn eval(&self, p: Point2) -> f64 {
        self.m * p.x + self.n * p.y + self.l
    }
}

fn canonical_sign(m: f64, n: f64) -> f64 {
    if m > 0.0 || (m == 0.0 && n > 0.0) {
        1.0
    } else {
        -1.0
    }
}

/// The line through `p` and `q`.
pub fn line_through(p: Point2, q: Point2) -> Result<Line2H> {
    line_through_with_jacobian(p, q).map(|(line, _)| line)
}

/// Jacobian of the canonical coefficients `(m, n, l)` with respect to
/// `(p.x, p.y, q.x, q.y)`; row `k` holds the derivatives of coefficient `k`.
pub type LineJacobian = [[f64; 4]; 3];

/// [`line_through`] together with the derivatives of its coefficients.
///
/// The sign flip of the canonicalization is locally constant and does not
/// contribute to the derivative.
pub fn line_through_with_jacobian(p: Point2, q: Point2) -> Result<(Line2H, LineJacobian)> {
    if !(p.distance(q) > EPS_DEGENERATE) {
        return Err(GeomError::DegenerateLine {
            eps: EPS_DEGENERATE,
        });
    }
    // (p.x, p.y, 1) x (q.x, q.y, 1)
    let a = p.y - q.y;
    let b = q.x - p.x;
    let c = p.x * q.y - p.y * q.x;

    // Raw coefficient derivatives w.r.t. (px, py, qx, qy).
    let da = [0.0, 1.0, 0.0, -1.0];
    let db = [-1.0, 0.0, 1.0, 0.0];
    let dc = [q.y, -q.x, -p.y, p.x];

    let r2 = a * a + b * b;
    let r = r2.sqrt();
    let s = canonical_sign(a, b);
    let inv_r = s / r;
    let line = Line2H {
        m: a * inv_r,
        n: b * inv_r,
        l: c * inv_r,
    };

    // d(u / r) = du / r - u (a da + b db) / r^3
    let mut jac = [[0.0; 4]; 3];
    for k in 0..4 {
        let dr_over_r = (a * da[k] + b * db[k]) / r2;
        jac[0][k] = inv_r * (da[k] - a * dr_over_r);
        jac[1][k] = inv_r * (db[k] - b * dr_over_r);
        jac[2][k] = inv_r * (dc[k] - c * dr_over_r);
    }
    Ok((line, jac))
}

/// Determinant of the 3x3 matrix whose rows are the coefficients of the three
/// lines. Zero exactly when the lines meet in a common (possibly ideal) point.
pub fn concurrency_det(l1: &Line2H, l2: &Line2H, l3: &Line2H) -> f64 {
    det3(&[l1.coefficients(), l2.coefficients(), l3.coefficients()])
}

pub(crate) fn det3(r: &[[f64; 3]; 3]) -> f64 {
    r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
        - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
        + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
}

/// Cofactor matrix of `r`: `cof[i][j] = d det / d r[i][j]`.
pub(crate) fn cofactors3(r: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    [
        [
            r[1][1] * r[2][2] - r[1][2] * r[2][1],
            r[1][2] * r[2][0] - r[1][0] * r[2][2],
            r[1][0] * r[2][1] - r[1][1] * r[2][0],
        ],
        [
            r[0][2] * r[2][1] - r[0][1] * r[2][2],
            r[0][0] * r[2][2] - r[0][2] * r[2][0],
            r[0][1] * r[2][0] - r[0][0] * r[2][1],
        ],
        [
            r[0][1] * r[1][2] - r[0][2] * r[1][1],
            r[0][2] * r[1][0] - r[0][0] * r[1][2],
            r[0][0] * r[1][1] - r[0][1] * r[1][0],
        ],
    ]
}

/// Finite intersection point of two lines.
pub fn lines_intersection(l1: &Line2H, l2: &Line2H) -> Result<Point2> {
    let w = l1.m * l2.n - l2.m * l1.n;
    if w.abs() <= EPS_PARALLEL {
        return Err(GeomError::ParallelLines);
    }
    let x = (l1.n * l2.l - l2.n * l1.l) / w;
    let y = (l2.m * l1.l - l1.m * l2.l) / w;
    Ok(Point2::new(x, y))
}
