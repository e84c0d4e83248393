//! Gradient-descent cuboid refinement and the noisy-scene study built on it.
//!
//! The objective anchors the iterate to the noisy input with smooth-L1 and
//! adds `lambda_vp` times the vanishing-point loss:
//! `J(x) = smooth_l1(x, noisy) + lambda_vp * vp_loss(x)`.

use rayon::prelude::*;

use crate::cuboid::{from_roi_relative, to_roi_relative, Box2D, Cuboid2D, Frame};
use crate::error::{GeomError, Result};
use crate::fusion::mix64;
use crate::metrics::{cuboid_quality, pck, PckConfig};
use crate::synth::{perturb, random_scene};
use crate::vploss::{smooth_l1, vp_loss, LossValue};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub lambda_vp: f64,
    pub sigma: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            steps: 200,
            learning_rate: 0.05,
            lambda_vp: 0.1,
            sigma: 0.02,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(GeomError::InvalidInput("steps must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(GeomError::InvalidInput("learning rate must be positive".into()));
        }
        if !(self.lambda_vp >= 0.0 && self.lambda_vp.is_finite()) {
            return Err(GeomError::InvalidInput("lambda_vp must be non-negative".into()));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(GeomError::InvalidInput("sigma must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    /// Final iterate, or the last valid one when `aborted` is set.
    pub cuboid: Cuboid2D,
    /// Objective at the start and after every completed step.
    pub trace: Vec<f64>,
    /// Set when an iterate collapsed an edge and descent stopped early.
    pub aborted: Option<GeomError>,
}

fn objective(x: &Cuboid2D, anchor: &[f64; 16], lambda_vp: f64) -> Result<LossValue> {
    let fit = smooth_l1(&x.to_flat(), anchor);
    if lambda_vp == 0.0 {
        return Ok(fit);
    }
    Ok(fit + vp_loss(x)?.scaled(lambda_vp))
}

/// Runs `cfg.steps` plain gradient-descent updates starting at `noisy`.
pub fn refine_cuboid(noisy: &Cuboid2D, cfg: &RefineConfig) -> Result<Refinement> {
    cfg.validate()?;
    noisy.expect_frame(Frame::RoiRelative)?;
    let anchor = noisy.to_flat();
    let mut x = *noisy;
    let mut current = objective(&x, &anchor, cfg.lambda_vp)?;
    let mut trace = Vec::with_capacity(cfg.steps + 1);
    trace.push(current.value);

    for _ in 0..cfg.steps {
        let flat = x.to_flat();
        let next: [f64; 16] = std::array::from_fn(|k| flat[k] - cfg.learning_rate * current.grad[k]);
        let candidate = match Cuboid2D::from_flat(&next, Frame::RoiRelative) {
            Ok(c) => c,
            Err(e) => {
                return Ok(Refinement {
                    cuboid: x,
                    trace,
                    aborted: Some(e),
                })
            }
        };
        match objective(&candidate, &anchor, cfg.lambda_vp) {
            Ok(value) => {
                x = candidate;
                current = value;
                trace.push(current.value);
            }
            Err(e) => {
                return Ok(Refinement {
                    cuboid: x,
                    trace,
                    aborted: Some(e),
                })
            }
        }
    }
    Ok(Refinement {
        cuboid: x,
        trace,
        aborted: None,
    })
}

/// Per-arm aggregate of a study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmSummary {
    pub lambda_vp: f64,
    /// Percent of correct keypoints, 0..100.
    pub mean_pck: f64,
    pub mean_cq: f64,
    /// Mean Euclidean vertex error to ground truth, RoI-relative units.
    pub mean_vertex_error: f64,
    pub aborted: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmResult {
    pub pck: f64,
    pub cq: f64,
    pub vertex_error: f64,
    pub max_displacement: f64,
    pub final_objective: f64,
    pub aborted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneRow {
    pub index: usize,
    pub noise_seed: u64,
    pub cq_noisy: f64,
    pub vp: ArmResult,
    pub baseline: ArmResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub config: RefineConfig,
    pub seed: u64,
    pub vp: ArmSummary,
    pub baseline: ArmSummary,
    pub scenes: Vec<SceneRow>,
}

/// Seed of the `index`-th generated scene of a study.
pub fn scene_seed(seed: u64, index: usize) -> u64 {
    mix64(seed.wrapping_add(index as u64))
}

/// Seed of the noise added to the `index`-th scene of a study.
pub fn noise_seed(seed: u64, index: usize) -> u64 {
    mix64(scene_seed(seed, index) ^ 0xA076_1D64_78BD_642F)
}

/// Generates `n_scenes` scenes and runs [`study_scenes`] on them.
pub fn refinement_study(n_scenes: usize, cfg: &RefineConfig, seed: u64) -> Result<StudyReport> {
    if n_scenes == 0 {
        return Err(GeomError::InvalidInput("study needs at least one scene".into()));
    }
    let scenes: Vec<(Cuboid2D, Box2D)> = (0..n_scenes)
        .into_par_iter()
        .map(|k| {
            let s = random_scene(scene_seed(seed, k));
            (s.cuboid, s.bbox)
        })
        .collect();
    study_scenes(&scenes, cfg, seed)
}

/// Perturbs each image-frame ground truth, relative to its box, and refines
/// it twice: with `cfg.lambda_vp` and with no vanishing-point term.
pub fn study_scenes(scenes: &[(Cuboid2D, Box2D)], cfg: &RefineConfig, seed: u64) -> Result<StudyReport> {
    cfg.validate()?;
    if scenes.is_empty() {
        return Err(GeomError::InvalidInput("study needs at least one scene".into()));
    }
    let baseline_cfg = RefineConfig {
        lambda_vp: 0.0,
        ..*cfg
    };
    let rows = scenes
        .par_iter()
        .enumerate()
        .map(|(index, (gt, bbox))| study_one(index, gt, bbox, cfg, &baseline_cfg, seed))
        .collect::<Result<Vec<_>>>()?;

    Ok(StudyReport {
        config: *cfg,
        seed,
        vp: summarize(cfg.lambda_vp, rows.iter().map(|r| &r.vp)),
        baseline: summarize(0.0, rows.iter().map(|r| &r.baseline)),
        scenes: rows,
    })
}

fn study_one(
    index: usize,
    gt: &Cuboid2D,
    bbox: &Box2D,
    cfg: &RefineConfig,
    baseline_cfg: &RefineConfig,
    seed: u64,
) -> Result<SceneRow> {
    gt.expect_frame(Frame::Image)?;
    let truth = to_roi_relative(gt, bbox)?;
    let noise_seed = noise_seed(seed, index);
    let noisy = perturb(&truth, cfg.sigma, noise_seed)?;
    let cq_noisy = cuboid_quality(&noisy)?;

    let arm = |arm_cfg: &RefineConfig| -> Result<ArmResult> {
        let r = refine_cuboid(&noisy, arm_cfg)?;
        let image = from_roi_relative(&r.cuboid, bbox)?;
        let pck = pck(&image, gt, bbox, &PckConfig::default())?;
        let dist = |a: &Cuboid2D, b: &Cuboid2D| -> Vec<f64> {
            a.vertices()
                .iter()
                .zip(b.vertices())
                .map(|(p, q)| p.distance(*q))
                .collect()
        };
        let err = dist(&r.cuboid, &truth);
        Ok(ArmResult {
            pck,
            cq: cuboid_quality(&r.cuboid)?,
            vertex_error: err.iter().sum::<f64>() / 8.0,
            max_displacement: dist(&r.cuboid, &noisy).into_iter().fold(0.0, f64::max),
            final_objective: *r.trace.last().expect("trace starts with the initial value"),
            aborted: r.aborted.is_some(),
        })
    };

    Ok(SceneRow {
        index,
        noise_seed,
        cq_noisy,
        vp: arm(cfg)?,
        baseline: arm(baseline_cfg)?,
    })
}

fn summarize<'a>(lambda_vp: f64, arms: impl ExactSizeIterator<Item = &'a ArmResult>) -> ArmSummary {
    let n = arms.len() as f64;
    let mut s = ArmSummary {
        lambda_vp,
        mean_pck: 0.0,
        mean_cq: 0.0,
        mean_vertex_error: 0.0,
        aborted: 0,
    };
    for a in arms {
        s.mean_pck += a.pck;
        s.mean_cq += a.cq;
        s.mean_vertex_error += a.vertex_error;
        s.aborted += usize::from(a.aborted);
    }
    s.mean_pck *= 100.0 / n;
    s.mean_cq /= n;
    s.mean_vertex_error /= n;
    s
}
