//! Four-point homography estimation by direct linear transform.

use crate::error::{GeomError, Result};
use crate::projective::Point2;

/// Minimum triangle area of any three corners of a quad.
pub const EPS_COLLINEAR: f64 = 1e-9;

/// 3x3 projective map stored row-major with the last entry fixed to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    entries: [f64; 9],
}

impl Homography {
    pub const IDENTITY: Homography = Homography {
        entries: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
    };

    /// Scales `entries` so the last one is 1 and checks invertibility.
    pub fn from_entries(entries: [f64; 9]) -> Result<Self> {
        let s = entries[8];
        if !(s.abs() > f64::EPSILON) || entries.iter().any(|e| !e.is_finite()) {
            return Err(GeomError::DegenerateConfiguration(
                "homography has a vanishing last entry".into(),
            ));
        }
        let h = Homography {
            entries: entries.map(|e| e / s),
        };
        if !(h.det().abs() > 1e-12) {
            return Err(GeomError::DegenerateConfiguration(
                "homography is singular".into(),
            ));
        }
        Ok(h)
    }

    pub fn entries(&self) -> &[f64; 9] {
        &self.entries
    }

    pub fn det(&self) -> f64 {
        let m = &self.entries;
        m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
            + m[2] * (m[3] * m[7] - m[4] * m[6])
    }

    /// Maps `p` and dehomogenizes.
    pub fn apply(&self, p: Point2) -> Point2 {
        let m = &self.entries;
        let w = m[6] * p.x + m[7] * p.y + m[8];
        Point2::new(
            (m[0] * p.x + m[1] * p.y + m[2]) / w,
            (m[3] * p.x + m[4] * p.y + m[5]) / w,
        )
    }

    /// `self * rhs`, normalized.
    pub fn compose(&self, rhs: &Homography) -> Result<Homography> {
        Homography::from_entries(mul3(&self.entries, &rhs.entries))
    }

    pub fn inverse(&self) -> Result<Homography> {
        let m = &self.entries;
        let adj = [
            m[4] * m[8] - m[5] * m[7],
            m[2] * m[7] - m[1] * m[8],
            m[1] * m[5] - m[2] * m[4],
            m[5] * m[6] - m[3] * m[8],
            m[0] * m[8] - m[2] * m[6],
            m[2] * m[3] - m[0] * m[5],
            m[3] * m[7] - m[4] * m[6],
            m[1] * m[6] - m[0] * m[7],
            m[0] * m[4] - m[1] * m[3],
        ];
        Homography::from_entries(adj)
    }
}

fn mul3(a: &[f64; 9], b: &[f64; 9]) -> [f64; 9] {
    let mut out = [0.0; 9];
    for r in 0..3 {
        for c in 0..3 {
            out[3 * r + c] = (0..3).map(|k| a[3 * r + k] * b[3 * k + c]).sum();
        }
    }
    out
}

fn triangle_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)).abs()
}

fn check_no_collinear_triple(pts: &[Point2; 4], which: &str) -> Result<()> {
    for skip in 0..4 {
        let tri: Vec<Point2> = (0..4).filter(|&i| i != skip).map(|i| pts[i]).collect();
        if !(triangle_area(tri[0], tri[1], tri[2]) > EPS_COLLINEAR) {
            return Err(GeomError::DegenerateConfiguration(format!(
                "three {which} corners are collinear"
            )));
        }
    }
    Ok(())
}

/// Similarity moving the centroid to the origin with mean distance sqrt(2).
fn conditioning(pts: &[Point2; 4]) -> [f64; 9] {
    let cx = pts.iter().map(|p| p.x).sum::<f64>() / 4.0;
    let cy = pts.iter().map(|p| p.y).sum::<f64>() / 4.0;
    let mean = pts.iter().map(|p| (p.x - cx).hypot(p.y - cy)).sum::<f64>() / 4.0;
    let s = std::f64::consts::SQRT_2 / mean;
    [s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0]
}

fn inverse_conditioning(t: &[f64; 9]) -> [f64; 9] {
    let s = t[0];
    [1.0 / s, 0.0, -t[2] / s, 0.0, 1.0 / s, -t[5] / s, 0.0, 0.0, 1.0]
}

fn apply_affine(t: &[f64; 9], p: Point2) -> Point2 {
    Point2::new(t[0] * p.x + t[2], t[4] * p.y + t[5])
}

/// Solves `a x = b` in place by Gaussian elimination with partial pivoting.
pub(crate) fn solve8(mut a: [[f64; 8]; 8], mut b: [f64; 8]) -> Result<[f64; 8]> {
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..8 {
        let pivot = (col..8)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if !(a[pivot][col].abs() > 1e-12 * scale) {
            return Err(GeomError::DegenerateConfiguration(
                "DLT system is singular".into(),
            ));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..8 {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            let pivot_row = a[col];
            for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 8];
    for row in (0..8).rev() {
        let tail: f64 = (row + 1..8).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}

/// Homography `H` with `H * t[i] ~ q[i]` for the four correspondences.
///
/// `dst_corners` are the target-plane corners `t`, `src_quad` the quad `q` in
/// the source map, so `H` maps target pixels back into the source.
pub fn dlt_homography(dst_corners: &[Point2; 4], src_quad: &[Point2; 4]) -> Result<Homography> {
    if dst_corners.iter().chain(src_quad).any(|p| !p.is_finite()) {
        return Err(GeomError::InvalidInput("non-finite corner".into()));
    }
    check_no_collinear_triple(dst_corners, "target")?;
    check_no_collinear_triple(src_quad, "source")?;

    let tt = conditioning(dst_corners);
    let tq = conditioning(src_quad);

    let mut a = [[0.0; 8]; 8];
    let mut b = [0.0; 8];
    for i in 0..4 {
        let t = apply_affine(&tt, dst_corners[i]);
        let q = apply_affine(&tq, src_quad[i]);
        a[2 * i] = [t.x, t.y, 1.0, 0.0, 0.0, 0.0, -t.x * q.x, -t.y * q.x];
        b[2 * i] = q.x;
        a[2 * i + 1] = [0.0, 0.0, 0.0, t.x, t.y, 1.0, -t.x * q.y, -t.y * q.y];
        b[2 * i + 1] = q.y;
    }
    let h = solve8(a, b)?;
    let hn = [h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0];
    let full = mul3(&inverse_conditioning(&tq), &mul3(&hn, &tt));
    Homography::from_entries(full)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: [(f64, f64); 4]) -> [Point2; 4] {
        v.map(|(x, y)| Point2::new(x, y))
    }

    const UNIT: [(f64, f64); 4] = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];

    fn assert_close(h: &Homography, expected: [f64; 9], tol: f64) {
        for (a, b) in h.entries().iter().zip(expected) {
            assert!((a - b).abs() <= tol, "{:?} vs {expected:?}", h.entries());
        }
    }

    #[test]
    fn same_corners_give_identity() {
        let q = pts([(3.0, 4.0), (20.0, 5.0), (18.0, 30.0), (1.0, 25.0)]);
        let h = dlt_homography(&q, &q).unwrap();
        assert_close(&h, *Homography::IDENTITY.entries(), 1e-13);
    }

    #[test]
    fn shifted_square_is_translation() {
        let shifted = UNIT.map(|(x, y)| (x + 3.0, y + 5.0));
        let h = dlt_homography(&pts(UNIT), &pts(shifted)).unwrap();
        assert_close(&h, [1.0, 0.0, 3.0, 0.0, 1.0, 5.0, 0.0, 0.0, 1.0], 1e-13);
    }

    #[test]
    fn collinear_corners_rejected() {
        let bad = pts([(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (0.0, 1.0)]);
        assert!(matches!(
            dlt_homography(&pts(UNIT), &bad),
            Err(GeomError::DegenerateConfiguration(_))
        ));
        assert!(matches!(
            dlt_homography(&bad, &pts(UNIT)),
            Err(GeomError::DegenerateConfiguration(_))
        ));
    }

    #[test]
    fn solver_handles_row_permutation() {
        let mut a = [[0.0; 8]; 8];
        for i in 0..8 {
            a[i][(i + 3) % 8] = (i + 1) as f64;
        }
        let b = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let x = solve8(a, b).unwrap();
        for i in 0..8 {
            assert!((x[(i + 3) % 8] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn inverse_round_trip() {
        let q = pts([(3.0, 4.0), (20.0, 5.0), (18.0, 30.0), (1.0, 25.0)]);
        let h = dlt_homography(&pts(UNIT), &q).unwrap();
        let id = h.compose(&h.inverse().unwrap()).unwrap();
        assert_close(&id, *Homography::IDENTITY.entries(), 1e-12);
    }
}
