//! JSON file schemas of the command line.
//!
//! Cuboid: `{"frame":"image","vertices":[[x,y],...8],"bbox2d":[x,y,w,h]}`.
//! A scenes file is `{"scenes":[...]}` where every scene is a cuboid object
//! with extra `camera` and `box3d` members. Output objects are
//! `serde_json::Value` maps, which keep their keys sorted; numbers use the
//! shortest representation that round-trips.

use serde::Deserialize;
use serde_json::{json, Value};

use crate::cuboid::{Box2D, Cuboid2D, Frame};
use crate::metrics::PrPoint;
use crate::projective::Point2;
use crate::refine::{ArmResult, ArmSummary, RefineConfig, StudyReport};
use crate::synth::{Box3D, Camera, Scene};

use super::CliError;

#[derive(Debug, Clone, Deserialize)]
pub struct CuboidJson {
    pub frame: String,
    pub vertices: Vec<[f64; 2]>,
    #[serde(default)]
    pub bbox2d: Option<[f64; 4]>,
    #[serde(default)]
    pub camera: Option<CameraJson>,
    #[serde(default)]
    pub box3d: Option<Box3DJson>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CameraJson {
    pub focal: f64,
    pub principal: [f64; 2],
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

#[derive(Debug, Clone, Deserialize)]
pub struct Box3DJson {
    pub center: [f64; 3],
    pub dims: [f64; 3],
    pub yaw: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CuboidFile {
    Scenes { scenes: Vec<CuboidJson> },
    Many(Vec<CuboidJson>),
    One(Box<CuboidJson>),
}

impl CuboidFile {
    pub fn into_vec(self) -> Vec<CuboidJson> {
        match self {
            CuboidFile::Scenes { scenes } => scenes,
            CuboidFile::Many(v) => v,
            CuboidFile::One(c) => vec![*c],
        }
    }
}

/// A cuboid read from disk together with its optional RoI box.
#[derive(Debug, Clone, Copy)]
pub struct LoadedCuboid {
    pub cuboid: Cuboid2D,
    pub bbox: Option<Box2D>,
}

impl LoadedCuboid {
    /// The cuboid in RoI-relative coordinates, converting through its box.
    pub fn roi_relative(&self, fallback: Option<&Box2D>) -> Result<Cuboid2D, CliError> {
        match self.cuboid.frame() {
            Frame::RoiRelative => Ok(self.cuboid),
            Frame::Image => {
                let b = self.bbox.as_ref().or(fallback).ok_or_else(|| {
                    CliError::Validation("image-frame cuboid needs a bbox2d".into())
                })?;
                Ok(crate::cuboid::to_roi_relative(&self.cuboid, b)?)
            }
        }
    }

    /// The cuboid in image coordinates, converting through its box.
    pub fn image(&self, fallback: Option<&Box2D>) -> Result<Cuboid2D, CliError> {
        match self.cuboid.frame() {
            Frame::Image => Ok(self.cuboid),
            Frame::RoiRelative => {
                let b = self.bbox.as_ref().or(fallback).ok_or_else(|| {
                    CliError::Validation("roi_relative cuboid needs a bbox2d".into())
                })?;
                Ok(crate::cuboid::from_roi_relative(&self.cuboid, b)?)
            }
        }
    }
}

pub fn parse_frame(s: &str) -> Result<Frame, CliError> {
    match s {
        "image" => Ok(Frame::Image),
        "roi_relative" | "roi" => Ok(Frame::RoiRelative),
        other => Err(CliError::Validation(format!("unknown frame {other:?}"))),
    }
}

impl CuboidJson {
    pub fn load(&self) -> Result<LoadedCuboid, CliError> {
        let frame = parse_frame(&self.frame)?;
        if self.vertices.len() != 8 {
            return Err(CliError::Validation(format!(
                "cuboid needs 8 vertices, got {}",
                self.vertices.len()
            )));
        }
        let v: [Point2; 8] = std::array::from_fn(|i| Point2::from(self.vertices[i]));
        let cuboid = Cuboid2D::new(v, frame)?;
        let bbox = self
            .bbox2d
            .map(|[x, y, w, h]| Box2D::new(x, y, w, h))
            .transpose()?;
        Ok(LoadedCuboid { cuboid, bbox })
    }

    /// Full scene, when the camera and world box are present.
    pub fn scene(&self) -> Result<Option<Scene>, CliError> {
        let loaded = self.load()?;
        let (Some(cam), Some(b3), Some(bbox)) = (&self.camera, &self.box3d, loaded.bbox) else {
            return Ok(None);
        };
        let camera = Camera::new(
            cam.focal,
            Point2::from(cam.principal),
            cam.rotation,
            cam.translation,
        )?;
        let box3d = Box3D::new(b3.center, b3.dims, b3.yaw)?;
        Ok(Some(Scene {
            box3d,
            camera,
            cuboid: loaded.image(None)?,
            bbox,
        }))
    }
}

pub fn cuboid_value(c: &Cuboid2D, bbox: Option<&Box2D>) -> Value {
    let vertices: Vec<[f64; 2]> = c.vertices().iter().map(|&p| p.into()).collect();
    let mut v = json!({
        "frame": c.frame().name(),
        "vertices": vertices,
    });
    if let Some(b) = bbox {
        v["bbox2d"] = json!(b.to_array());
    }
    v
}

pub fn scene_value(scene: &Scene, index: usize, seed: u64) -> Value {
    let mut v = cuboid_value(&scene.cuboid, Some(&scene.bbox));
    let cam = &scene.camera;
    v["camera"] = json!({
        "focal": cam.focal,
        "principal": [cam.principal.x, cam.principal.y],
        "rotation": cam.rotation,
        "translation": cam.translation,
    });
    v["box3d"] = json!({
        "center": scene.box3d.center,
        "dims": scene.box3d.dims,
        "yaw": scene.box3d.yaw,
    });
    v["index"] = json!(index);
    v["seed"] = json!(seed);
    v
}

fn arm_summary_value(a: &ArmSummary) -> Value {
    json!({
        "aborted": a.aborted,
        "lambda_vp": a.lambda_vp,
        "mean_cq": a.mean_cq,
        "mean_pck": a.mean_pck,
        "mean_vertex_error": a.mean_vertex_error,
    })
}

fn arm_result_value(a: &ArmResult) -> Value {
    json!({
        "aborted": a.aborted,
        "cq": a.cq,
        "final_objective": a.final_objective,
        "max_displacement": a.max_displacement,
        "pck": a.pck,
        "vertex_error": a.vertex_error,
    })
}

pub fn config_value(c: &RefineConfig) -> Value {
    json!({
        "lambda_vp": c.lambda_vp,
        "learning_rate": c.learning_rate,
        "sigma": c.sigma,
        "steps": c.steps,
    })
}

pub fn report_value(r: &StudyReport) -> Value {
    let rows: Vec<Value> = r
        .scenes
        .iter()
        .map(|row| {
            json!({
                "baseline": arm_result_value(&row.baseline),
                "cq_noisy": row.cq_noisy,
                "index": row.index,
                "noise_seed": row.noise_seed,
                "vp": arm_result_value(&row.vp),
            })
        })
        .collect();
    json!({
        "arms": {
            "baseline": arm_summary_value(&r.baseline),
            "vp": arm_summary_value(&r.vp),
        },
        "config": config_value(&r.config),
        "scene_count": r.scenes.len(),
        "scenes": rows,
        "seed": r.seed,
    })
}

pub fn pr_value(points: &[PrPoint], ap: f64, pairs: usize) -> Value {
    let pts: Vec<Value> = points
        .iter()
        .map(|p| json!({"precision": p.precision, "recall": p.recall, "threshold": p.threshold}))
        .collect();
    json!({"ap": ap, "pairs": pairs, "points": pts})
}

/// Serialized form written by every subcommand: pretty JSON plus newline.
pub fn to_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("Value always serializes");
    s.push('\n');
    s
}

/// One verification pair: either a precomputed score or two embeddings.
#[derive(Debug, Clone, Deserialize)]
pub struct PairJson {
    #[serde(default)]
    pub score: Option<f64>,
    #[serde(default)]
    pub a: Option<Vec<f64>>,
    #[serde(default)]
    pub b: Option<Vec<f64>>,
    pub same: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PairsFile {
    Wrapped { pairs: Vec<PairJson> },
    Bare(Vec<PairJson>),
}

/// A vector file: one array, or a list of arrays to concatenate.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum VectorFile {
    One(Vec<f64>),
    Parts(Vec<Vec<f64>>),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cuboid_schema_round_trip() {
        let text = r#"{"frame":"image","vertices":[[0,0],[1,0],[1,1],[0,1],[0,2],[1,2],[1,3],[0,3]],"bbox2d":[0,0,1,3]}"#;
        let parsed: CuboidFile = serde_json::from_str(text).unwrap();
        let items = parsed.into_vec();
        assert_eq!(items.len(), 1);
        let loaded = items[0].load().unwrap();
        assert_eq!(loaded.cuboid.frame(), Frame::Image);
        assert_eq!(loaded.bbox.unwrap().h, 3.0);
        let back = cuboid_value(&loaded.cuboid, loaded.bbox.as_ref());
        let reparsed: CuboidJson = serde_json::from_value(back.clone()).unwrap();
        assert_eq!(reparsed.load().unwrap().cuboid, loaded.cuboid);
        // keys come out sorted
        assert_eq!(
            serde_json::to_string(&back).unwrap(),
            r#"{"bbox2d":[0.0,0.0,1.0,3.0],"frame":"image","vertices":[[0.0,0.0],[1.0,0.0],[1.0,1.0],[0.0,1.0],[0.0,2.0],[1.0,2.0],[1.0,3.0],[0.0,3.0]]}"#
        );
    }

    #[test]
    fn bad_cuboids_rejected() {
        let short: CuboidJson =
            serde_json::from_str(r#"{"frame":"image","vertices":[[0,0]]}"#).unwrap();
        assert!(matches!(short.load(), Err(CliError::Validation(_))));
        let frame: CuboidJson = serde_json::from_str(
            r#"{"frame":"world","vertices":[[0,0],[1,0],[1,1],[0,1],[0,2],[1,2],[1,3],[0,3]]}"#,
        )
        .unwrap();
        assert!(matches!(frame.load(), Err(CliError::Validation(_))));
    }

    #[test]
    fn vector_files() {
        let one: VectorFile = serde_json::from_str("[1, 2.5]").unwrap();
        assert!(matches!(one, VectorFile::One(v) if v == vec![1.0, 2.5]));
        let parts: VectorFile = serde_json::from_str("[[1], [2, 3]]").unwrap();
        assert!(matches!(parts, VectorFile::Parts(p) if p.len() == 2));
    }
}
