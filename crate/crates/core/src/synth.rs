//! Pinhole-camera scenes with exactly known projected cuboids.
//!
//! World frame: `y` points down, so the roof of a box is its face with the
//! smallest `y`. A box's yaw turns it about the vertical axis; at zero yaw
//! its length runs along world `x` and its width along world `z`.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cuboid::{Box2D, Cuboid2D, Frame};
use crate::error::{GeomError, Result};
use crate::projective::Point2;

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

/// Minimum camera-frame depth of a projected point.
pub const EPS_DEPTH: f64 = 1e-6;

/// Side of the square synthetic image, in pixels.
pub const IMAGE_SIZE: f64 = 256.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub focal: f64,
    pub principal: Point2,
    /// World-to-camera rotation.
    pub rotation: Mat3,
    /// World-to-camera translation: `x_cam = R x_world + t`.
    pub translation: Vec3,
}

impl Camera {
    pub fn new(focal: f64, principal: Point2, rotation: Mat3, translation: Vec3) -> Result<Self> {
        if !(focal > 0.0 && focal.is_finite()) {
            return Err(GeomError::InvalidInput(format!("focal must be positive, got {focal}")));
        }
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| rotation[k][i] * rotation[k][j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                if !((dot - expect).abs() <= 1e-12) {
                    return Err(GeomError::InvalidInput("rotation is not orthonormal".into()));
                }
            }
        }
        if !principal.is_finite() || translation.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::InvalidInput("camera has non-finite fields".into()));
        }
        Ok(Self {
            focal,
            principal,
            rotation,
            translation,
        })
    }

    pub fn to_camera(&self, p: &Vec3) -> Vec3 {
        let r = &self.rotation;
        std::array::from_fn(|i| r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2] + self.translation[i])
    }

    /// Homogeneous image of the point at infinity in world direction `d`.
    pub fn vanishing_point(&self, d: &Vec3) -> Vec3 {
        let r = &self.rotation;
        let c: Vec3 = std::array::from_fn(|i| r[i][0] * d[0] + r[i][1] * d[1] + r[i][2] * d[2]);
        [
            self.focal * c[0] + self.principal.x * c[2],
            self.focal * c[1] + self.principal.y * c[2],
            c[2],
        ]
    }

    /// Projects a world point whose camera depth exceeds [`EPS_DEPTH`].
    pub fn project(&self, p: &Vec3) -> Option<Point2> {
        let c = self.to_camera(p);
        (c[2] > EPS_DEPTH).then(|| {
            Point2::new(
                self.focal * c[0] / c[2] + self.principal.x,
                self.focal * c[1] / c[2] + self.principal.y,
            )
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3D {
    pub center: Vec3,
    /// Length, width, height.
    pub dims: Vec3,
    pub yaw: f64,
}

impl Box3D {
    pub fn new(center: Vec3, dims: Vec3, yaw: f64) -> Result<Self> {
        if dims.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(GeomError::InvalidInput("box dimensions must be positive".into()));
        }
        if center.iter().any(|v| !v.is_finite()) || !yaw.is_finite() {
            return Err(GeomError::InvalidInput("box has non-finite fields".into()));
        }
        Ok(Self { center, dims, yaw })
    }

    /// Unit world directions of the length (F), vertical (R) and width (S)
    /// edges. The vertical direction points up.
    pub fn axes(&self) -> [Vec3; 3] {
        let (s, c) = self.yaw.sin_cos();
        [[c, 0.0, s], [0.0, -1.0, 0.0], [-s, 0.0, c]]
    }

    /// World coordinates of the eight labeled corners.
    pub fn corners(&self) -> [Vec3; 8] {
        let [f, up, side] = self.axes();
        let [l, w, h] = self.dims.map(|d| d / 2.0);
        // (length sign, width sign) for roof vertices 0..3
        let signs = [(1.0, -1.0), (1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0)];
        std::array::from_fn(|i| {
            let (sl, sw) = signs[i % 4];
            let sh = if i < 4 { 1.0 } else { -1.0 };
            std::array::from_fn(|k| {
                self.center[k] + sl * l * f[k] + sw * w * side[k] + sh * h * up[k]
            })
        })
    }
}

/// Projects the eight labeled box corners.
pub fn project_cuboid(b: &Box3D, cam: &Camera) -> Result<Cuboid2D> {
    let corners = b.corners();
    let mut v = [Point2::default(); 8];
    for (i, p) in corners.iter().enumerate() {
        v[i] = cam.project(p).ok_or_else(|| GeomError::BehindCamera {
            index: i,
            depth: cam.to_camera(p)[2],
        })?;
    }
    Cuboid2D::new(v, Frame::Image)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scene {
    pub box3d: Box3D,
    pub camera: Camera,
    /// Exact projection, image frame.
    pub cuboid: Cuboid2D,
    /// Tight bounds of the projected vertices.
    pub bbox: Box2D,
}

fn rotation_x(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
}

fn rotation_z(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| a[i][k] * b[k][j]).sum()))
}

/// Smallest pixel length of any box edge accepted by [`random_scene`].
const MIN_EDGE_PX: f64 = 4.0;

/// Deterministic scene for `seed`: all vertices in front of the camera and
/// inside the 256 x 256 image.
pub fn random_scene(seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        if let Some(scene) = sample_scene(&mut rng) {
            return scene;
        }
    }
}

fn sample_scene(rng: &mut ChaCha8Rng) -> Option<Scene> {
    let focal = rng.random_range(150.0..350.0);
    let principal = Point2::new(IMAGE_SIZE / 2.0, IMAGE_SIZE / 2.0);
    let pitch = rng.random_range(0.05..0.5);
    let roll = rng.random_range(-0.1..0.1);
    let rotation = matmul(&rotation_z(roll), &rotation_x(pitch));
    let camera = Camera::new(focal, principal, rotation, [0.0; 3]).ok()?;

    let depth = rng.random_range(4.0..20.0);
    let u = rng.random_range(64.0..192.0);
    let v = rng.random_range(64.0..192.0);
    let cam_center = [
        (u - principal.x) * depth / focal,
        (v - principal.y) * depth / focal,
        depth,
    ];
    // R^T (x_cam - t) with t = 0
    let center: Vec3 =
        std::array::from_fn(|i| (0..3).map(|k| rotation[k][i] * cam_center[k]).sum());
    let dims = [
        rng.random_range(1.0..3.0),
        rng.random_range(1.0..2.0),
        rng.random_range(1.0..2.0),
    ];
    let yaw = rng.random_range(0.0..std::f64::consts::TAU);
    let box3d = Box3D::new(center, dims, yaw).ok()?;

    let cuboid = project_cuboid(&box3d, &camera).ok()?;
    let inside = cuboid
        .vertices()
        .iter()
        .all(|p| (0.0..=IMAGE_SIZE).contains(&p.x) && (0.0..=IMAGE_SIZE).contains(&p.y));
    if !inside {
        return None;
    }
    let short_edge = crate::cuboid::Direction::ALL.iter().any(|&d| {
        crate::cuboid::direction_edges(d)
            .edges
            .iter()
            .any(|&(i, j)| cuboid.vertex(i).distance(cuboid.vertex(j)) < MIN_EDGE_PX)
    });
    if short_edge {
        return None;
    }
    let bbox = Box2D::bounding(cuboid.vertices()).ok()?;
    Some(Scene {
        box3d,
        camera,
        cuboid,
        bbox,
    })
}

/// Adds i.i.d. zero-mean Gaussian noise of standard deviation `sigma` to all
/// 16 coordinates. Deterministic for a given `seed`.
pub fn perturb(c: &Cuboid2D, sigma: f64, seed: u64) -> Result<Cuboid2D> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(GeomError::InvalidInput(format!("sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(*c);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = || -> f64 {
        let z: f64 = StandardNormal.sample(&mut rng);
        sigma * z
    };
    let v = c.vertices().map(|p| {
        let dx = noise();
        let dy = noise();
        Point2::new(p.x + dx, p.y + dy)
    });
    Cuboid2D::new(v, c.frame())
}

/// The worked reference scene: a unit cube five units down the optical axis
/// of an axis-aligned camera with focal length 100 and principal point at the
/// origin.
pub fn reference_scene() -> Scene {
    let camera = Camera::new(
        100.0,
        Point2::new(0.0, 0.0),
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        [0.0; 3],
    )
    .expect("valid camera");
    let box3d = Box3D::new([0.0, 0.0, 5.0], [1.0; 3], 0.0).expect("valid box");
    let cuboid = project_cuboid(&box3d, &camera).expect("cube is in front of the camera");
    let bbox = Box2D::bounding(cuboid.vertices()).expect("non-degenerate bounds");
    Scene {
        box3d,
        camera,
        cuboid,
        bbox,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cuboid::{direction_edges, face_quad, to_roi_relative, Direction, Face};
    use crate::projective::line_through;
    use crate::vploss::vp_loss;

    #[test]
    fn reference_roof_projection() {
        let s = reference_scene();
        let near = 100.0 * 0.5 / 4.5;
        let far = 100.0 * 0.5 / 5.5;
        let expect = [(near, -near), (far, -far), (-far, -far), (-near, -near)];
        for (i, (x, y)) in expect.iter().enumerate() {
            let p = s.cuboid.vertex(i);
            assert!((p.x - x).abs() < 1e-12 && (p.y - y).abs() < 1e-12, "vertex {i}: {p:?}");
        }
        // bottom vertices mirror the roof across y = 0
        for i in 0..4 {
            let (top, bottom) = (s.cuboid.vertex(i), s.cuboid.vertex(i + 4));
            assert_eq!(top.x, bottom.x);
            assert_eq!(top.y, -bottom.y);
        }
    }

    #[test]
    fn reference_side_face() {
        // Side = (1, 2, 6, 5): the far face at depth 5.5.
        let s = reference_scene();
        let q = face_quad(&s.cuboid, Face::Side).unwrap();
        let far = 100.0 * 0.5 / 5.5;
        let expect = [(far, -far), (-far, -far), (-far, far), (far, far)];
        for (p, (x, y)) in q.corners.iter().zip(expect) {
            assert!((p.x - x).abs() < 1e-12 && (p.y - y).abs() < 1e-12);
        }
    }

    #[test]
    fn behind_camera() {
        let cam = reference_scene().camera;
        let b = Box3D::new([0.0, 0.0, -5.0], [1.0; 3], 0.0).unwrap();
        assert!(matches!(
            project_cuboid(&b, &cam),
            Err(GeomError::BehindCamera { .. })
        ));
    }

    #[test]
    fn scenes_are_deterministic() {
        assert_eq!(random_scene(17), random_scene(17));
        assert_ne!(random_scene(17), random_scene(18));
    }

    #[test]
    fn scenes_are_valid() {
        for seed in 0..200 {
            let s = random_scene(seed);
            for p in s.cuboid.vertices() {
                assert!(s.bbox.contains(*p));
                assert!((0.0..=IMAGE_SIZE).contains(&p.x) && (0.0..=IMAGE_SIZE).contains(&p.y));
            }
            let rel = to_roi_relative(&s.cuboid, &s.bbox).unwrap();
            assert!(vp_loss(&rel).unwrap().value <= 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn true_vanishing_points_lie_on_projected_edges() {
        for seed in 0..200 {
            let s = random_scene(seed);
            let axes = s.box3d.axes();
            for (k, d) in [Direction::F, Direction::R, Direction::S].into_iter().enumerate() {
                let vp = s.camera.vanishing_point(&axes[k]);
                for (i, j) in direction_edges(d).edges {
                    let l = line_through(s.cuboid.vertex(i), s.cuboid.vertex(j)).unwrap();
                    let residual = l.m * vp[0] + l.n * vp[1] + l.l * vp[2];
                    if vp[2].abs() > 1e-9 {
                        // pixel distance of the finite vanishing point from the line
                        let dist = (residual / vp[2]).abs();
                        assert!(dist <= 1e-8, "seed {seed} {d:?}: {dist}");
                    } else {
                        let norm = vp.iter().map(|v| v * v).sum::<f64>().sqrt();
                        assert!((residual / norm).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn edge_parallel_to_image_plane_still_concurrent() {
        // Reference scene has F and R edges parallel to the image plane.
        let s = reference_scene();
        let rel = to_roi_relative(&s.cuboid, &s.bbox).unwrap();
        assert!(vp_loss(&rel).unwrap().value <= 1e-12);
    }

    #[test]
    fn perturbation() {
        let c = random_scene(3).cuboid;
        assert_eq!(perturb(&c, 0.0, 1).unwrap(), c);
        assert_eq!(perturb(&c, 0.1, 5).unwrap(), perturb(&c, 0.1, 5).unwrap());
        assert_ne!(perturb(&c, 0.1, 5).unwrap(), perturb(&c, 0.1, 6).unwrap());
        assert!(perturb(&c, -1.0, 5).is_err());
    }

    #[test]
    fn perturbation_has_requested_spread() {
        let sigma = 0.02;
        let zero = Cuboid2D::new([Point2::default(); 8], Frame::RoiRelative).unwrap();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut n = 0usize;
        for seed in 0..6250u64 {
            for v in perturb(&zero, sigma, seed).unwrap().to_flat() {
                sum += v;
                sum_sq += v * v;
                n += 1;
            }
        }
        assert_eq!(n, 100_000);
        let mean = sum / n as f64;
        let std = (sum_sq / n as f64 - mean * mean).sqrt();
        assert!((std - sigma).abs() <= 0.02 * sigma, "std {std}");
        assert!(mean.abs() < 5.0 * sigma / (n as f64).sqrt());
    }

    #[test]
    fn camera_validation() {
        let bad = [[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(Camera::new(100.0, Point2::default(), bad, [0.0; 3]).is_err());
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(Camera::new(0.0, Point2::default(), id, [0.0; 3]).is_err());
        assert!(Box3D::new([0.0; 3], [1.0, 0.0, 1.0], 0.0).is_err());
    }
}
