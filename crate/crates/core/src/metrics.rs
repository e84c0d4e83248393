//! Keypoint accuracy, cuboid quality and verification precision/recall.

use crate::cuboid::{Box2D, Cuboid2D, Frame};
use crate::error::{GeomError, Result};
use crate::vploss::vp_loss;

/// Loss floor applied before taking the logarithm in [`cuboid_quality`].
pub const CQ_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PckConfig {
    pub alpha: f64,
}

impl Default for PckConfig {
    fn default() -> Self {
        Self { alpha: 0.1 }
    }
}

/// Fraction of vertices within `alpha * max(w, h)` of their ground-truth
/// counterpart, matched by label.
pub fn pck(pred: &Cuboid2D, gt: &Cuboid2D, roi: &Box2D, cfg: &PckConfig) -> Result<f64> {
    if !(cfg.alpha > 0.0) {
        return Err(GeomError::InvalidInput(format!("alpha must be positive, got {}", cfg.alpha)));
    }
    if pred.frame() != gt.frame() {
        return Err(GeomError::WrongFrame {
            expected: gt.frame().name(),
            actual: pred.frame().name(),
        });
    }
    let threshold = cfg.alpha * roi.max_side();
    let hits = pred
        .vertices()
        .iter()
        .zip(gt.vertices())
        .filter(|(p, g)| p.distance(**g) <= threshold)
        .count();
    Ok(hits as f64 / 8.0)
}

/// `-ln(max(vp_loss, 1e-12))` of an RoI-relative cuboid.
pub fn cuboid_quality(c: &Cuboid2D) -> Result<f64> {
    c.expect_frame(Frame::RoiRelative)?;
    Ok(quality_from_loss(vp_loss(c)?.value))
}

pub fn quality_from_loss(loss: f64) -> f64 {
    -loss.max(CQ_EPS).ln()
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(GeomError::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(GeomError::ZeroVector);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub precision: f64,
    pub recall: f64,
    pub threshold: f64,
}

/// Precision/recall at every distinct score, descending, and the step-wise
/// average precision `sum_k (R_k - R_{k-1}) P_k`.
///
/// Pairs with equal scores enter at the same threshold.
pub fn pr_curve(scores: &[(f64, bool)]) -> Result<(Vec<PrPoint>, f64)> {
    if scores.iter().any(|(s, _)| s.is_nan()) {
        return Err(GeomError::InvalidInput("score is NaN".into()));
    }
    let positives = scores.iter().filter(|(_, same)| *same).count();
    if positives == 0 {
        return Err(GeomError::NoPositives);
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == threshold {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let precision = tp as f64 / (tp + fp) as f64;
        let recall = tp as f64 / positives as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        points.push(PrPoint {
            precision,
            recall,
            threshold,
        });
    }
    Ok((points, ap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projective::Point2;
    use proptest::prelude::*;

    fn square_cuboid(offset: f64) -> Cuboid2D {
        let base = [
            (0.0, 0.0),
            (10.0, 0.0),
            (12.0, -3.0),
            (2.0, -3.0),
            (0.0, 10.0),
            (10.0, 10.0),
            (12.0, 7.0),
            (2.0, 7.0),
        ];
        Cuboid2D::new(base.map(|(x, y)| Point2::new(x + offset, y)), Frame::Image).unwrap()
    }

    #[test]
    fn pck_cases() {
        let gt = square_cuboid(0.0);
        let roi = Box2D::new(0.0, -3.0, 12.0, 13.0).unwrap();
        let cfg = PckConfig::default();
        assert_eq!(pck(&gt, &gt, &roi, &cfg).unwrap(), 1.0);
        let far = square_cuboid(2.0 * 0.1 * 13.0);
        assert_eq!(pck(&far, &gt, &roi, &cfg).unwrap(), 0.0);

        // shift vertices 0..3 by 1.2 (inside 1.3), 4..7 by 1.4 (outside)
        let mut v = *gt.vertices();
        for (i, p) in v.iter_mut().enumerate() {
            p.y += if i < 4 { 1.2 } else { 1.4 };
        }
        let half = Cuboid2D::new(v, Frame::Image).unwrap();
        assert_eq!(pck(&half, &gt, &roi, &cfg).unwrap(), 0.5);
    }

    #[test]
    fn quality_values() {
        assert!((quality_from_loss(1e-2) - 4.605170185988091).abs() < 1e-9);
        assert!((quality_from_loss(0.0) - 27.631021115928547).abs() < 1e-9);
        assert!((quality_from_loss(1e-15) - 27.631021115928547).abs() < 1e-9);
        assert!(quality_from_loss(1e-4) > quality_from_loss(1e-3));
    }

    #[test]
    fn cosine_cases() {
        assert!((cosine_similarity(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 4.0]).unwrap(), 0.0);
        let s = cosine_similarity(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[1.0, 1.0]).unwrap_err(), GeomError::ZeroVector);
    }

    #[test]
    fn pr_cases() {
        let (_, ap) = pr_curve(&[(0.9, true), (0.8, true), (0.3, false), (0.1, false)]).unwrap();
        assert_eq!(ap, 1.0);

        let (points, ap) = pr_curve(&[(0.9, true), (0.8, false), (0.7, true)]).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-12);
        assert_eq!(points.len(), 3);
        assert_eq!((points[0].precision, points[0].recall), (1.0, 0.5));
        assert_eq!((points[1].precision, points[1].recall), (0.5, 0.5));
        assert!((points[2].precision - 2.0 / 3.0).abs() < 1e-15 && points[2].recall == 1.0);

        let (points, _) = pr_curve(&[(0.2, false), (0.1, true), (0.5, false)]).unwrap();
        assert_eq!(points.last().unwrap().recall, 1.0);

        assert_eq!(pr_curve(&[(0.5, false)]).unwrap_err(), GeomError::NoPositives);
    }

    #[test]
    fn ties_share_a_threshold() {
        let (points, ap) = pr_curve(&[(0.5, true), (0.5, false), (0.1, true)]).unwrap();
        assert_eq!(points.len(), 2);
        assert_eq!(points[0].precision, 0.5);
        assert!((ap - (0.5 * 0.5 + 0.5 * 2.0 / 3.0)).abs() < 1e-15);
    }

    fn scored_pairs() -> impl Strategy<Value = Vec<(f64, bool)>> {
        proptest::collection::vec((-1.0..1.0f64, any::<bool>()), 1..40)
            .prop_filter("needs a positive", |v| v.iter().any(|p| p.1))
    }

    proptest! {
        #[test]
        fn pck_monotone_in_alpha(shift in proptest::array::uniform16(-3.0..3.0f64), a1 in 0.01..0.5f64, a2 in 0.01..0.5f64) {
            let gt = square_cuboid(0.0);
            let flat = gt.to_flat();
            let pred = Cuboid2D::from_flat(&std::array::from_fn(|k| flat[k] + shift[k]), Frame::Image).unwrap();
            let roi = Box2D::new(0.0, -3.0, 12.0, 13.0).unwrap();
            let (lo, hi) = (a1.min(a2), a1.max(a2));
            let narrow = pck(&pred, &gt, &roi, &PckConfig { alpha: lo }).unwrap();
            let wide = pck(&pred, &gt, &roi, &PckConfig { alpha: hi }).unwrap();
            prop_assert!(narrow <= wide);
        }

        #[test]
        fn cosine_is_scale_invariant(
            a in proptest::collection::vec(-5.0..5.0f64, 6),
            b in proptest::collection::vec(-5.0..5.0f64, 6),
            s in 1e-3..1e3f64, t in 1e-3..1e3f64,
        ) {
            prop_assume!(a.iter().any(|v| v.abs() > 1e-3) && b.iter().any(|v| v.abs() > 1e-3));
            let base = cosine_similarity(&a, &b).unwrap();
            let sa: Vec<f64> = a.iter().map(|v| v * s).collect();
            let sb: Vec<f64> = b.iter().map(|v| v * t).collect();
            prop_assert!((cosine_similarity(&sa, &sb).unwrap() - base).abs() <= 1e-12);
            prop_assert!((-1.0..=1.0).contains(&base));
        }

        #[test]
        fn ap_invariant_under_monotone_transform(pairs in scored_pairs()) {
            let (_, ap) = pr_curve(&pairs).unwrap();
            let mapped: Vec<(f64, bool)> = pairs.iter().map(|&(s, f)| ((3.0 * s).exp() + 7.0, f)).collect();
            let (_, ap2) = pr_curve(&mapped).unwrap();
            prop_assert!((ap - ap2).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&ap));
        }

        #[test]
        fn top_ranked_positive_has_full_precision(mut pairs in scored_pairs()) {
            pairs.push((2.0, true));
            let (points, _) = pr_curve(&pairs).unwrap();
            prop_assert_eq!(points[0].precision, 1.0);
        }
    }
}
