//! Perspective RoI extraction: a face quad of the source map is resampled
//! onto a fixed-size canonical grid through a backward homography.
//!
//! Sampling conventions shared by every routine here:
//! - pixel `(row, col)` has its center at `(col + 0.5, row + 0.5)`;
//! - a sample point outside `[0, W] x [0, H]` reads as zero;
//! - inside that range the four bilinear taps are clamped to the grid.

mod fmap;
mod homography;

pub use fmap::{FeatureMap, FMAP_MAGIC};
pub use homography::{dlt_homography, Homography, EPS_COLLINEAR};

use rayon::prelude::*;

use crate::cuboid::Box2D;
use crate::error::{GeomError, Result};
use crate::projective::Point2;

/// Default pooled resolution of one face feature.
pub const DEFAULT_FACE_SIZE: (usize, usize) = (7, 7);

/// Bilinear interpolation of `channel` at continuous position `(x, y)`.
pub fn bilinear_sample(f: &FeatureMap, x: f64, y: f64, channel: usize) -> f64 {
    let (w, h) = (f.width(), f.height());
    if w == 0 || h == 0 || !(x >= 0.0 && x <= w as f64 && y >= 0.0 && y <= h as f64) {
        return 0.0;
    }
    let u = (x - 0.5).clamp(0.0, (w - 1) as f64);
    let v = (y - 0.5).clamp(0.0, (h - 1) as f64);
    let c0 = u.floor() as usize;
    let r0 = v.floor() as usize;
    let c1 = (c0 + 1).min(w - 1);
    let r1 = (r0 + 1).min(h - 1);
    let fx = u - c0 as f64;
    let fy = v - r0 as f64;

    let top = (1.0 - fx) * f.get(r0, c0, channel) + fx * f.get(r0, c1, channel);
    let bottom = (1.0 - fx) * f.get(r1, c0, channel) + fx * f.get(r1, c1, channel);
    (1.0 - fy) * top + fy * bottom
}

fn check_output_size(out_h: usize, out_w: usize) -> Result<()> {
    if out_h == 0 || out_w == 0 {
        return Err(GeomError::InvalidInput(format!(
            "output size must be at least 1x1, got {out_h}x{out_w}"
        )));
    }
    Ok(())
}

/// Fills an `out_h x out_w` map by sampling `f` at `source(row, col)`.
fn resample(
    f: &FeatureMap,
    out_h: usize,
    out_w: usize,
    source: impl Fn(usize, usize) -> Point2 + Sync,
) -> FeatureMap {
    let channels = f.channels();
    let mut out = FeatureMap::zeros(out_h, out_w, channels);
    let row_len = out_w * channels;
    if row_len == 0 {
        return out;
    }
    out.data_mut()
        .par_chunks_mut(row_len)
        .enumerate()
        .for_each(|(row, buf)| {
            for col in 0..out_w {
                let p = source(row, col);
                for ch in 0..channels {
                    buf[col * channels + ch] = bilinear_sample(f, p.x, p.y, ch);
                }
            }
        });
    out
}

/// Warps the quadrilateral `quad` of `f` onto an `out_h x out_w` grid.
///
/// The target corners `(0,0), (W,0), (W,H), (0,H)` correspond to
/// `quad[0..4]` in order.
pub fn perspective_roi(
    f: &FeatureMap,
    quad: &[Point2; 4],
    out_h: usize,
    out_w: usize,
) -> Result<FeatureMap> {
    check_output_size(out_h, out_w)?;
    let (w, h) = (out_w as f64, out_h as f64);
    let target = [
        Point2::new(0.0, 0.0),
        Point2::new(w, 0.0),
        Point2::new(w, h),
        Point2::new(0.0, h),
    ];
    let hom = dlt_homography(&target, quad)?;
    Ok(resample(f, out_h, out_w, |row, col| {
        hom.apply(Point2::new(col as f64 + 0.5, row as f64 + 0.5))
    }))
}

/// Axis-aligned RoI pooling with one bilinear sample per output cell, taken
/// at the cell center.
pub fn roi_align(f: &FeatureMap, roi: &Box2D, out_h: usize, out_w: usize) -> Result<FeatureMap> {
    check_output_size(out_h, out_w)?;
    let sx = roi.w / out_w as f64;
    let sy = roi.h / out_h as f64;
    Ok(resample(f, out_h, out_w, |row, col| {
        Point2::new(
            roi.x + (col as f64 + 0.5) * sx,
            roi.y + (row as f64 + 0.5) * sy,
        )
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(h: usize, w: usize) -> FeatureMap {
        FeatureMap::from_fn(h, w, 2, |r, c, ch| (r * w + c) as f64 * if ch == 0 { 1.0 } else { -0.5 })
            .unwrap()
    }

    fn rect(x: f64, y: f64, w: f64, h: f64) -> [Point2; 4] {
        Box2D::new(x, y, w, h).unwrap().corners()
    }

    #[test]
    fn constant_map_samples_constant() {
        let f = FeatureMap::from_fn(3, 4, 1, |_, _, _| 7.0).unwrap();
        for (x, y) in [(0.0, 0.0), (0.2, 2.9), (4.0, 3.0), (1.7, 1.1), (3.9, 0.4)] {
            assert_eq!(bilinear_sample(&f, x, y, 0), 7.0, "({x},{y})");
        }
    }

    #[test]
    fn center_of_two_by_two() {
        let f = FeatureMap::new(2, 2, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(bilinear_sample(&f, 1.0, 1.0, 0), 2.5);
        assert_eq!(bilinear_sample(&f, 0.5, 0.5, 0), 1.0);
        assert_eq!(bilinear_sample(&f, 1.5, 0.5, 0), 2.0);
    }

    #[test]
    fn outside_reads_zero() {
        let f = FeatureMap::from_fn(3, 3, 1, |_, _, _| 5.0).unwrap();
        assert_eq!(bilinear_sample(&f, -100.0, 1.0, 0), 0.0);
        assert_eq!(bilinear_sample(&f, 1.0, 3.0001, 0), 0.0);
        assert_eq!(bilinear_sample(&f, 1e9, 1e9, 0), 0.0);
    }

    #[test]
    fn full_map_quad_is_identity() {
        let f = ramp(5, 6);
        let out = perspective_roi(&f, &rect(0.0, 0.0, 6.0, 5.0), 5, 6).unwrap();
        for (a, b) in out.data().iter().zip(f.data()) {
            assert!((a - b).abs() <= 1e-12);
        }
        let out = roi_align(&f, &Box2D::new(0.0, 0.0, 6.0, 5.0).unwrap(), 5, 6).unwrap();
        assert_eq!(out.data(), f.data());
    }

    #[test]
    fn constant_source_gives_constant_output() {
        let f = FeatureMap::from_fn(8, 8, 3, |_, _, _| -2.25).unwrap();
        let quad = [
            Point2::new(1.0, 1.5),
            Point2::new(6.5, 0.5),
            Point2::new(7.0, 7.0),
            Point2::new(0.5, 6.0),
        ];
        let out = perspective_roi(&f, &quad, 7, 7).unwrap();
        assert_eq!((out.height(), out.width(), out.channels()), (7, 7, 3));
        assert!(out.data().iter().all(|&v| (v + 2.25).abs() <= 1e-12));
    }

    #[test]
    fn rectangle_quad_matches_roi_align() {
        let f = ramp(4, 4);
        let out_p = perspective_roi(&f, &rect(0.5, 1.0, 2.5, 2.0), 3, 5).unwrap();
        let out_a = roi_align(&f, &Box2D::new(0.5, 1.0, 2.5, 2.0).unwrap(), 3, 5).unwrap();
        for (a, b) in out_p.data().iter().zip(out_a.data()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_output_size_rejected() {
        let f = ramp(4, 4);
        assert!(roi_align(&f, &Box2D::new(0.0, 0.0, 1.0, 1.0).unwrap(), 0, 3).is_err());
        assert!(perspective_roi(&f, &rect(0.0, 0.0, 1.0, 1.0), 2, 0).is_err());
    }

    fn quad_strategy() -> impl Strategy<Value = [Point2; 4]> {
        proptest::array::uniform4((-2.0..2.0f64, -2.0..2.0f64)).prop_map(|d| {
            let base = rect(2.0, 2.0, 8.0, 6.0);
            std::array::from_fn(|i| base[i].translate(d[i].0, d[i].1))
        })
    }

    proptest! {
        #[test]
        fn warp_is_linear_in_the_source(
            quad in quad_strategy(), alpha in -3.0..3.0f64, beta in -3.0..3.0f64
        ) {
            let f = ramp(12, 12);
            let g = FeatureMap::from_fn(12, 12, 2, |r, c, ch| ((r * 7 + c * 3 + ch) % 5) as f64).unwrap();
            let mix = FeatureMap::new(
                12, 12, 2,
                f.data().iter().zip(g.data()).map(|(a, b)| alpha * a + beta * b).collect(),
            ).unwrap();
            let wf = perspective_roi(&f, &quad, 6, 5).unwrap();
            let wg = perspective_roi(&g, &quad, 6, 5).unwrap();
            let wm = perspective_roi(&mix, &quad, 6, 5).unwrap();
            for k in 0..wm.data().len() {
                let expect = alpha * wf.data()[k] + beta * wg.data()[k];
                prop_assert!((wm.data()[k] - expect).abs() <= 1e-10);
            }
        }

        #[test]
        fn output_stays_in_padded_range(quad in quad_strategy(), shift in -20.0..20.0f64) {
            let f = FeatureMap::from_fn(12, 12, 1, |r, c, _| (r as f64 - c as f64) + shift).unwrap();
            let (lo, hi) = f.min_max().unwrap();
            let out = perspective_roi(&f, &quad, 7, 7).unwrap();
            let (olo, ohi) = out.min_max().unwrap();
            prop_assert!(olo >= lo.min(0.0) - 1e-12);
            prop_assert!(ohi <= hi.max(0.0) + 1e-12);
        }
    }
}
