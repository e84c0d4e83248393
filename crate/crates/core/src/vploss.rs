//! Vanishing-point regularization and the 3D-branch regression loss.
//!
//! For each edge direction, the four parallel edges give two triples of
//! lines `(e1, e2, e3)` and `(e1, e4, e3)`. Each triple contributes the
//! square of its concurrency determinant; a perfect perspective projection
//! of a box makes every determinant vanish. Gradients are exact and flow
//! through the unit normalization of the line coefficients.

use crate::cuboid::{direction_edges, Cuboid2D, Direction, Frame};
use crate::error::Result;
use crate::projective::{cofactors3, det3, line_through_with_jacobian, LineJacobian};

/// Number of regressed coordinates: 8 vertices, x then y.
pub const NUM_COORDS: usize = 16;

/// A scalar loss and its gradient with respect to the 16 vertex coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub grad: [f64; NUM_COORDS],
}

impl LossValue {
    pub const ZERO: LossValue = LossValue {
        value: 0.0,
        grad: [0.0; NUM_COORDS],
    };

    pub fn scaled(&self, k: f64) -> LossValue {
        LossValue {
            value: k * self.value,
            grad: self.grad.map(|g| k * g),
        }
    }
}

impl std::ops::Add for LossValue {
    type Output = LossValue;

    fn add(mut self, rhs: LossValue) -> LossValue {
        self += rhs;
        self
    }
}

impl std::ops::AddAssign for LossValue {
    fn add_assign(&mut self, rhs: LossValue) {
        self.value += rhs.value;
        for (g, r) in self.grad.iter_mut().zip(rhs.grad) {
            *g += r;
        }
    }
}

/// Weights of the multi-task objective: 2D detection, 3D branch, classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 0.1,
            lambda3: 1.0,
        }
    }
}

/// Vanishing-point loss of one direction. The cuboid must be RoI-relative.
pub fn vp_loss_direction(c: &Cuboid2D, direction: Direction) -> Result<LossValue> {
    c.expect_frame(Frame::RoiRelative)?;
    let edges = direction_edges(direction).edges;

    let mut rows = [[0.0; 3]; 4];
    let mut jacs: [LineJacobian; 4] = [[[0.0; 4]; 3]; 4];
    for (k, &(i, j)) in edges.iter().enumerate() {
        let (line, jac) = line_through_with_jacobian(c.vertex(i), c.vertex(j))?;
        rows[k] = line.coefficients();
        jacs[k] = jac;
    }

    let mut out = LossValue::ZERO;
    for triple in [[0, 1, 2], [0, 3, 2]] {
        let m = triple.map(|k| rows[k]);
        let d = det3(&m);
        let cof = cofactors3(&m);
        out.value += d * d;
        for (r, &k) in triple.iter().enumerate() {
            let (i, j) = edges[k];
            let slots = [2 * i, 2 * i + 1, 2 * j, 2 * j + 1];
            for (var, &slot) in slots.iter().enumerate() {
                let dd: f64 = (0..3).map(|col| cof[r][col] * jacs[k][col][var]).sum();
                out.grad[slot] += 2.0 * d * dd;
            }
        }
    }
    Ok(out)
}

/// Sum of the F, R and S direction losses.
pub fn vp_loss(c: &Cuboid2D) -> Result<LossValue> {
    let mut total = LossValue::ZERO;
    for d in Direction::ALL {
        total += vp_loss_direction(c, d)?;
    }
    Ok(total)
}

/// Mean smooth-L1 over the 16 coordinates, with the transition at `|d| = 1`.
pub fn smooth_l1(pred: &[f64; NUM_COORDS], target: &[f64; NUM_COORDS]) -> LossValue {
    let n = NUM_COORDS as f64;
    let mut out = LossValue::ZERO;
    for k in 0..NUM_COORDS {
        let d = pred[k] - target[k];
        let (phi, dphi) = if d.abs() < 1.0 {
            (0.5 * d * d, d)
        } else {
            (d.abs() - 0.5, d.signum())
        };
        out.value += phi;
        out.grad[k] = dphi / n;
    }
    out.value /= n;
    out
}

/// Regression loss of the 3D branch: smooth-L1 to the target plus the
/// vanishing-point loss of the prediction.
pub fn loss_3dbranch(pred: &Cuboid2D, target: &Cuboid2D) -> Result<LossValue> {
    pred.expect_frame(Frame::RoiRelative)?;
    target.expect_frame(Frame::RoiRelative)?;
    Ok(smooth_l1(&pred.to_flat(), &target.to_flat()) + vp_loss(pred)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::GeomError;
    use crate::projective::Point2;
    use proptest::prelude::*;

    fn central_difference(f: impl Fn(&[f64; 16]) -> f64, x: &[f64; 16], h: f64) -> [f64; 16] {
        let mut out = [0.0; 16];
        for k in 0..16 {
            let mut up = *x;
            let mut dn = *x;
            up[k] += h;
            dn[k] -= h;
            out[k] = (f(&up) - f(&dn)) / (2.0 * h);
        }
        out
    }

    fn rel_err(a: &[f64; 16], b: &[f64; 16]) -> f64 {
        let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        diff / na.max(nb).max(1e-300)
    }

    fn roi(coords: [f64; 16]) -> Cuboid2D {
        Cuboid2D::from_flat(&coords, Frame::RoiRelative).unwrap()
    }

    /// Parallel-projection drawing with dyadic coordinates: F edges
    /// horizontal, R edges vertical, S edges at 45 degrees, all exactly
    /// parallel in floating point.
    fn prism() -> Cuboid2D {
        roi([
            -0.5, -0.25, -0.25, -0.5, 0.5, -0.5, 0.25, -0.25, //
            -0.5, 0.5, -0.25, 0.25, 0.5, 0.25, 0.25, 0.5,
        ])
    }

    fn skewed() -> Cuboid2D {
        roi([
            -0.41, -0.22, 0.12, -0.19, 0.43, -0.46, -0.08, -0.44, //
            -0.38, 0.47, 0.09, 0.41, 0.37, 0.22, -0.12, 0.18,
        ])
    }

    #[test]
    fn parallel_drawing_has_zero_loss() {
        let c = prism();
        for d in Direction::ALL {
            assert_eq!(vp_loss_direction(&c, d).unwrap().value, 0.0, "{d:?}");
        }
    }

    #[test]
    fn total_is_sum_of_directions() {
        let c = skewed();
        let total = vp_loss(&c).unwrap();
        let mut sum = 0.0;
        for d in Direction::ALL {
            sum += vp_loss_direction(&c, d).unwrap().value;
        }
        assert_eq!(total.value, sum);
        assert!(total.value > 0.0);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let x = skewed().to_flat();
        for d in Direction::ALL {
            let analytic = vp_loss_direction(&roi(x), d).unwrap().grad;
            let fd = central_difference(|v| vp_loss_direction(&roi(*v), d).unwrap().value, &x, 1e-6);
            assert!(rel_err(&analytic, &fd) <= 1e-6, "{d:?}");
        }
    }

    #[test]
    fn image_frame_is_rejected() {
        let c = Cuboid2D::from_flat(&skewed().to_flat(), Frame::Image).unwrap();
        assert!(matches!(vp_loss(&c), Err(GeomError::WrongFrame { .. })));
    }

    #[test]
    fn collapsed_edge_is_reported() {
        let mut v = *skewed().vertices();
        v[3] = v[0];
        let c = Cuboid2D::new(v, Frame::RoiRelative).unwrap();
        assert!(matches!(
            vp_loss_direction(&c, Direction::F),
            Err(GeomError::DegenerateLine { .. })
        ));
    }

    #[test]
    fn smooth_l1_closed_forms() {
        let zero = [0.0; 16];
        let same = smooth_l1(&zero, &zero);
        assert_eq!(same.value, 0.0);
        assert_eq!(same.grad, [0.0; 16]);

        let mut p = zero;
        p[5] = 0.5;
        assert_eq!(smooth_l1(&p, &zero).value, 0.0078125);

        p[5] = 2.0;
        let l = smooth_l1(&p, &zero);
        assert_eq!(l.value, 0.09375);
        assert_eq!(l.grad[5], 1.0 / 16.0);

        p[5] = -2.0;
        assert_eq!(smooth_l1(&p, &zero).grad[5], -1.0 / 16.0);
    }

    #[test]
    fn branch_loss_is_additive() {
        let pred = skewed();
        let target = prism();
        let total = loss_3dbranch(&pred, &target).unwrap();
        let parts = smooth_l1(&pred.to_flat(), &target.to_flat()) + vp_loss(&pred).unwrap();
        assert_eq!(total, parts);
        assert_eq!(loss_3dbranch(&target, &target).unwrap().value, 0.0);
    }

    #[test]
    fn default_weights() {
        let w = LossWeights::default();
        assert_eq!((w.lambda1, w.lambda2, w.lambda3), (1.0, 0.1, 1.0));
    }

    fn jitter() -> impl Strategy<Value = [f64; 16]> {
        proptest::array::uniform16(-0.05..0.05f64)
    }

    proptest! {
        #[test]
        fn translation_leaves_loss_unchanged(j in jitter(), tx in -2.0..2.0f64, ty in -2.0..2.0f64) {
            let base = skewed().to_flat();
            let c = roi(std::array::from_fn(|k| base[k] + j[k]));
            let moved = c.map(|p| Point2::new(p.x + tx, p.y + ty)).unwrap();
            let a = vp_loss(&c).unwrap().value;
            let b = vp_loss(&moved).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-10);
        }

        #[test]
        fn triple_order_does_not_matter(j in jitter()) {
            // Swapping e2 and e4 exchanges the two triples.
            let base = skewed().to_flat();
            let c = roi(std::array::from_fn(|k| base[k] + j[k]));
            let v = c.vertices();
            let mut swapped = *v;
            // F edges (0,3),(1,2),(5,6),(4,7): swap (1,2) with (4,7).
            swapped.swap(1, 4);
            swapped.swap(2, 7);
            let c2 = Cuboid2D::new(swapped, Frame::RoiRelative).unwrap();
            let a = vp_loss_direction(&c, Direction::F).unwrap().value;
            let b = vp_loss_direction(&c2, Direction::F).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-15 + 1e-12 * a);
        }

        #[test]
        fn loss_is_nonnegative_with_finite_gradient(j in proptest::array::uniform16(-0.3..0.3f64)) {
            let base = prism().to_flat();
            let c = roi(std::array::from_fn(|k| base[k] + j[k]));
            if let Ok(l) = vp_loss(&c) {
                prop_assert!(l.value >= 0.0);
                prop_assert!(l.grad.iter().all(|g| g.is_finite()));
            }
        }
    }
}
