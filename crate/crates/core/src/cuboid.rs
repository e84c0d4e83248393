//! The projected 3D box: vertex labeling, edge groups, faces and the
//! RoI-relative coordinate frame.
//!
//! Labeling convention:
//!
//! ```text
//!        3 -------- 2          roof    = 0 1 2 3
//!       /|         /|          bottom  = 4 5 6 7, vertex i+4 below vertex i
//!      0 -------- 1 |
//!      | 7 -------|-6          F edges = 0-3, 1-2, 5-6, 4-7
//!      |/         |/           R edges = 0-4, 1-5, 2-6, 3-7 (vertical)
//!      4 -------- 5            S edges = 0-1, 3-2, 4-5, 7-6
//! ```

use crate::error::{GeomError, Result};
use crate::projective::{Point2, EPS_DEGENERATE};

/// Axis-aligned 2D box: top-left corner plus width and height, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box2D {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Box2D {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && w.is_finite() && h.is_finite()) {
            return Err(GeomError::InvalidInput("box has non-finite fields".into()));
        }
        if !(w > 0.0 && h > 0.0) {
            return Err(GeomError::InvalidInput(format!(
                "box size must be positive, got {w} x {h}"
            )));
        }
        Ok(Self { x, y, w, h })
    }

    /// Tightest box containing all `points`.
    pub fn bounding(points: &[Point2]) -> Result<Self> {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        // widen by ulps until x + w really reaches the maximum
        let mut w = hi.x - lo.x;
        while lo.x + w < hi.x {
            w = w.next_up();
        }
        let mut h = hi.y - lo.y;
        while lo.y + h < hi.y {
            h = h.next_up();
        }
        Self::new(lo.x, lo.y, w, h)
    }

    pub fn center(&self) -> Point2 {
        Point2::new(self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn max_side(&self) -> f64 {
        self.w.max(self.h)
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.x && p.x <= self.x + self.w && p.y >= self.y && p.y <= self.y + self.h
    }

    /// Corners clockwise on screen from the top-left: TL, TR, BR, BL.
    pub fn corners(&self) -> [Point2; 4] {
        [
            Point2::new(self.x, self.y),
            Point2::new(self.x + self.w, self.y),
            Point2::new(self.x + self.w, self.y + self.h),
            Point2::new(self.x, self.y + self.h),
        ]
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x, self.y, self.w, self.h]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frame {
    Image,
    RoiRelative,
}

impl Frame {
    pub fn name(self) -> &'static str {
        match self {
            Frame::Image => "image",
            Frame::RoiRelative => "roi_relative",
        }
    }
}

/// Eight labeled image-plane vertices of a projected 3D box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cuboid2D {
    vertices: [Point2; 8],
    frame: Frame,
}

impl Cuboid2D {
    pub fn new(vertices: [Point2; 8], frame: Frame) -> Result<Self> {
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(GeomError::InvalidInput(format!(
                "vertex {i} is not finite"
            )));
        }
        Ok(Self { vertices, frame })
    }

    /// Builds a cuboid from 16 coordinates, x then y per vertex.
    pub fn from_flat(coords: &[f64; 16], frame: Frame) -> Result<Self> {
        let vertices = std::array::from_fn(|i| Point2::new(coords[2 * i], coords[2 * i + 1]));
        Self::new(vertices, frame)
    }

    pub fn to_flat(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for (i, v) in self.vertices.iter().enumerate() {
            out[2 * i] = v.x;
            out[2 * i + 1] = v.y;
        }
        out
    }

    pub fn vertices(&self) -> &[Point2; 8] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point2 {
        self.vertices[i]
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub(crate) fn expect_frame(&self, frame: Frame) -> Result<()> {
        if self.frame == frame {
            Ok(())
        } else {
            Err(GeomError::WrongFrame {
                expected: frame.name(),
                actual: self.frame.name(),
            })
        }
    }

    pub fn map(&self, f: impl Fn(Point2) -> Point2) -> Result<Self> {
        Self::new(self.vertices.map(f), self.frame)
    }
}

/// Direction of a family of parallel 3D box edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Front-to-back.
    F,
    /// Vertical.
    R,
    /// Side-to-side.
    S,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::F, Direction::R, Direction::S];

    pub fn name(self) -> &'static str {
        match self {
            Direction::F => "F",
            Direction::R => "R",
            Direction::S => "S",
        }
    }
}

/// The four parallel edges of one direction, as ordered vertex-index pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectionGroup {
    pub direction: Direction,
    pub edges: [(usize, usize); 4],
}

pub fn direction_edges(direction: Direction) -> DirectionGroup {
    let edges = match direction {
        Direction::F => [(0, 3), (1, 2), (5, 6), (4, 7)],
        Direction::R => [(0, 4), (1, 5), (2, 6), (3, 7)],
        Direction::S => [(0, 1), (3, 2), (4, 5), (7, 6)],
    };
    DirectionGroup { direction, edges }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    Front,
    Roof,
    Side,
}

impl Face {
    pub const ALL: [Face; 3] = [Face::Front, Face::Roof, Face::Side];

    /// Vertex indices in winding order, starting at the smallest index.
    pub fn vertex_indices(self) -> [usize; 4] {
        match self {
            Face::Roof => [0, 1, 2, 3],
            Face::Front => [0, 1, 5, 4],
            Face::Side => [1, 2, 6, 5],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Face::Front => "front",
            Face::Roof => "roof",
            Face::Side => "side",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceQuad {
    pub face: Face,
    pub corners: [Point2; 4],
}

pub fn face_quad(c: &Cuboid2D, face: Face) -> Result<FaceQuad> {
    let corners = face.vertex_indices().map(|i| c.vertex(i));
    for a in 0..4 {
        for b in a + 1..4 {
            if corners[a].distance(corners[b]) <= EPS_DEGENERATE {
                return Err(GeomError::DegenerateQuad { a, b });
            }
        }
    }
    Ok(FaceQuad { face, corners })
}

/// Expresses image-frame vertices relative to the center of `b`, scaled by its size.
pub fn to_roi_relative(c: &Cuboid2D, b: &Box2D) -> Result<Cuboid2D> {
    c.expect_frame(Frame::Image)?;
    let v = c.vertices.map(|p| {
        Point2::new(
            (p.x - b.x - b.w / 2.0) / b.w,
            (p.y - b.y - b.h / 2.0) / b.h,
        )
    });
    Cuboid2D::new(v, Frame::RoiRelative)
}

/// Inverse of [`to_roi_relative`].
pub fn from_roi_relative(c: &Cuboid2D, b: &Box2D) -> Result<Cuboid2D> {
    c.expect_frame(Frame::RoiRelative)?;
    let v = c
        .vertices
        .map(|p| Point2::new(p.x * b.w + b.x + b.w / 2.0, p.y * b.h + b.y + b.h / 2.0));
    Cuboid2D::new(v, Frame::Image)
}
