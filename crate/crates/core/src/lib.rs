//! Projective-geometry toolkit for vanishing-point regularized 3D box
//! regression.
//!
//! The crate covers the geometric side of a cuboid-regression branch:
//!
//! - [`projective`]: homogeneous lines and the concurrency determinant;
//! - [`cuboid`]: vertex labeling, edge groups, faces, RoI-relative frame;
//! - [`vploss`]: vanishing-point loss, smooth-L1 and their exact gradients;
//! - [`warp`]: four-point DLT, bilinear sampling, perspective RoI and RoIAlign;
//! - [`fusion`]: count sketch and compact bilinear pooling;
//! - [`synth`]: pinhole scenes with exactly known projections;
//! - [`refine`]: gradient-descent refinement and the noisy-scene study;
//! - [`metrics`]: PCK, cuboid quality, cosine similarity, PR curves and AP;
//! - [`cli`]: the `vpgeo` command line.

// Validation compares with `!(x > eps)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cuboid;
pub mod error;
pub mod fusion;
pub mod metrics;
pub mod projective;
pub mod refine;
pub mod synth;
pub mod vploss;
pub mod warp;

pub use cuboid::{Box2D, Cuboid2D, Direction, Face, FaceQuad, Frame};
pub use error::{GeomError, Result};
pub use projective::{Line2H, Point2};
pub use vploss::{LossValue, LossWeights};
pub use warp::{FeatureMap, Homography};
