//! Compact bilinear pooling via count sketches.
//!
//! A [`SketchPlan`] hashes each input coordinate to a bucket and a sign. The
//! hashes come from a counter-based generator so a plan is a pure function of
//! `(seed, input_dim, output_dim)` and can be rebuilt in any language:
//!
//! ```text
//! mix64(z):  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!            z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!            return z ^ (z >> 31)                       (wrapping u64 math)
//!
//! for coordinate i:
//!     a      = mix64(seed + (i + 1) * 0x9E3779B97F4A7C15)
//!     bucket = (a * output_dim) >> 64                   (128-bit product)
//!     b      = mix64(a ^ 0xD6E8FEB86659FD93)
//!     sign   = +1 if b >> 63 == 0 else -1
//! ```

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{GeomError, Result};

/// Pooled feature size of the fusion network.
pub const DEFAULT_SKETCH_DIM: usize = 16000;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const SIGN_SALT: u64 = 0xD6E8_FEB8_6659_FD93;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SketchPlan {
    input_dim: usize,
    output_dim: usize,
    bucket: Vec<usize>,
    sign: Vec<i8>,
    seed: u64,
}

impl SketchPlan {
    pub fn new(input_dim: usize, output_dim: usize, seed: u64) -> Result<Self> {
        if output_dim == 0 {
            return Err(GeomError::InvalidInput("sketch dimension must be positive".into()));
        }
        let mut bucket = Vec::with_capacity(input_dim);
        let mut sign = Vec::with_capacity(input_dim);
        for i in 0..input_dim as u64 {
            let a = mix64(seed.wrapping_add((i + 1).wrapping_mul(GOLDEN_GAMMA)));
            bucket.push(((a as u128 * output_dim as u128) >> 64) as usize);
            let b = mix64(a ^ SIGN_SALT);
            sign.push(if b >> 63 == 0 { 1 } else { -1 });
        }
        Ok(Self {
            input_dim,
            output_dim,
            bucket,
            sign,
            seed,
        })
    }

    /// A plan with explicit hashes.
    pub fn from_parts(output_dim: usize, bucket: Vec<usize>, sign: Vec<i8>) -> Result<Self> {
        if bucket.len() != sign.len() {
            return Err(GeomError::DimensionMismatch {
                expected: bucket.len(),
                actual: sign.len(),
            });
        }
        if output_dim == 0 || bucket.iter().any(|&b| b >= output_dim) {
            return Err(GeomError::InvalidInput("bucket outside [0, output_dim)".into()));
        }
        if sign.iter().any(|&s| s != 1 && s != -1) {
            return Err(GeomError::InvalidInput("signs must be +1 or -1".into()));
        }
        Ok(Self {
            input_dim: bucket.len(),
            output_dim,
            bucket,
            sign,
            seed: 0,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn bucket(&self) -> &[usize] {
        &self.bucket
    }

    pub fn sign(&self) -> &[i8] {
        &self.sign
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

pub fn count_sketch(x: &[f64], plan: &SketchPlan) -> Result<Vec<f64>> {
    if x.len() != plan.input_dim {
        return Err(GeomError::DimensionMismatch {
            expected: plan.input_dim,
            actual: x.len(),
        });
    }
    let mut out = vec![0.0; plan.output_dim];
    for ((&v, &b), &s) in x.iter().zip(&plan.bucket).zip(&plan.sign) {
        out[b] += f64::from(s) * v;
    }
    Ok(out)
}

/// Circular convolution of the two count sketches, computed with FFTs.
pub fn mcb_pool(x: &[f64], y: &[f64], plan_x: &SketchPlan, plan_y: &SketchPlan) -> Result<Vec<f64>> {
    if plan_x.output_dim != plan_y.output_dim {
        return Err(GeomError::DimensionMismatch {
            expected: plan_x.output_dim,
            actual: plan_y.output_dim,
        });
    }
    let d = plan_x.output_dim;
    let sx = count_sketch(x, plan_x)?;
    let sy = count_sketch(y, plan_y)?;

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(d);
    let inverse = planner.plan_fft_inverse(d);

    let mut fx: Vec<Complex<f64>> = sx.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut fy: Vec<Complex<f64>> = sy.iter().map(|&v| Complex::new(v, 0.0)).collect();
    forward.process(&mut fx);
    forward.process(&mut fy);
    for (a, b) in fx.iter_mut().zip(&fy) {
        *a *= b;
    }
    inverse.process(&mut fx);
    let scale = 1.0 / d as f64;
    Ok(fx.iter().map(|c| c.re * scale).collect())
}

pub fn concat(parts: &[&[f64]]) -> Vec<f64> {
    parts.concat()
}
