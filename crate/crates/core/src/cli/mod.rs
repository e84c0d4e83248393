//! The `vpgeo` command line.
//!
//! Exit codes: 0 success, 1 invalid arguments or input, 2 I/O failure,
//! 3 numeric or degenerate-geometry failure. Every nonzero exit writes a
//! one-line diagnostic to the error stream.

pub mod json;
pub mod render;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use crate::cuboid::{face_quad, Box2D, Direction, Face};
use crate::error::GeomError;
use crate::fusion::{concat, mcb_pool, SketchPlan, DEFAULT_SKETCH_DIM};
use crate::metrics::{cosine_similarity, cuboid_quality, pck, pr_curve, PckConfig};
use crate::projective::Point2;
use crate::refine::{refinement_study, scene_seed, study_scenes, RefineConfig};
use crate::synth::random_scene;
use crate::vploss::{loss_3dbranch, smooth_l1, vp_loss, vp_loss_direction};
use crate::warp::{perspective_roi, roi_align, FeatureMap};

use json::{CuboidFile, LoadedCuboid, PairsFile, VectorFile};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<GeomError> for CliError {
    fn from(e: GeomError) -> Self {
        match e {
            GeomError::InvalidInput(_)
            | GeomError::WrongFrame { .. }
            | GeomError::DimensionMismatch { .. }
            | GeomError::NoPositives => CliError::Validation(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutcome {
    pub exit_code: i32,
    pub message: String,
}

#[derive(Debug, Parser)]
#[command(
    name = "vpgeo",
    version,
    about = "Vanishing-point geometry toolkit for projected 3D boxes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate random pinhole scenes with exact projected cuboids.
    Synth(SynthArgs),
    /// Vanishing-point loss (and optionally the 3D-branch loss) of a cuboid.
    Loss(LossArgs),
    /// Refine noisy cuboids with and without the vanishing-point term.
    Fit(FitArgs),
    /// Warp a quadrilateral of a feature map onto a fixed grid.
    Warp(WarpArgs),
    /// Compact bilinear pooling of two vectors.
    Sketch(SketchArgs),
    /// PCK and cuboid quality of a prediction against ground truth.
    Metrics(MetricsArgs),
    /// Precision/recall curve and AP of verification pairs.
    Verify(VerifyArgs),
    /// SVG overlay of a cuboid and its vanishing points.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    count: usize,
    #[arg(long)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LossArgs {
    /// Cuboid or scenes JSON.
    #[arg(long)]
    cuboid: PathBuf,
    /// Regression target; image-frame targets use the prediction's box.
    #[arg(long)]
    target: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "count"])))]
struct FitArgs {
    /// Scenes JSON written by `synth`.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Generate this many scenes instead of reading them.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.02)]
    sigma: f64,
    #[arg(long = "lambda-vp", default_value_t = 0.1)]
    lambda_vp: f64,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long = "learning-rate", alias = "lr", default_value_t = 0.05)]
    learning_rate: f64,
    /// Report file; stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FaceArg {
    Front,
    Roof,
    Side,
}

impl From<FaceArg> for Face {
    fn from(f: FaceArg) -> Self {
        match f {
            FaceArg::Front => Face::Front,
            FaceArg::Roof => Face::Roof,
            FaceArg::Side => Face::Side,
        }
    }
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("region").required(true).args(["quad", "roi", "cuboid"])))]
struct WarpArgs {
    /// Source map in FMAP format.
    #[arg(long)]
    fmap: PathBuf,
    /// Four corners "x0,y0,x1,y1,x2,y2,x3,y3" (perspective warp).
    #[arg(long, allow_hyphen_values = true)]
    quad: Option<String>,
    /// Axis-aligned box "x,y,w,h" (RoIAlign).
    #[arg(long = "box", allow_hyphen_values = true)]
    roi: Option<String>,
    /// Image-frame cuboid JSON; use with --face.
    #[arg(long, requires = "face")]
    cuboid: Option<PathBuf>,
    #[arg(long, value_enum)]
    face: Option<FaceArg>,
    /// Output grid size "HxW".
    #[arg(long, default_value = "7x7")]
    out: String,
    /// Output FMAP file; stdout when omitted.
    #[arg(long)]
    to: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SketchArgs {
    /// JSON array, or array of arrays to concatenate.
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    y: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SKETCH_DIM)]
    dim: usize,
    /// Seed of the x plan; the y plan uses seed + 1.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long)]
    cuboid: PathBuf,
    /// PPM background image.
    #[arg(long)]
    background: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    CommandOutcome {
                        exit_code: 0,
                        message: String::new(),
                    }
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    CommandOutcome {
                        exit_code: 1,
                        message: text.lines().next().unwrap_or_default().to_string(),
                    }
                }
            };
        }
    };

    match dispatch(cli.command, stdout) {
        Ok(message) => CommandOutcome {
            exit_code: 0,
            message,
        },
        Err(e) => {
            let message = format!("vpgeo: error: {e}");
            let _ = writeln!(stderr, "{}", message.replace('\n', " "));
            CommandOutcome {
                exit_code: e.exit_code(),
                message,
            }
        }
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write) -> Result<String, CliError> {
    match cmd {
        Command::Synth(a) => synth(a, stdout),
        Command::Loss(a) => loss(a, stdout),
        Command::Fit(a) => fit(a, stdout),
        Command::Warp(a) => warp(a, stdout),
        Command::Sketch(a) => sketch(a, stdout),
        Command::Metrics(a) => metrics(a, stdout),
        Command::Verify(a) => verify(a, stdout),
        Command::Render(a) => render(a, stdout),
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn emit(bytes: &[u8], out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, bytes)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => stdout
            .write_all(bytes)
            .map_err(|e| CliError::Io(format!("cannot write output: {e}"))),
    }
}

fn emit_json(v: &Value, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    emit(json::to_text(v).as_bytes(), out, stdout)
}

fn load_cuboids(path: &Path) -> Result<Vec<LoadedCuboid>, CliError> {
    let file: CuboidFile = read_json(path)?;
    file.into_vec().iter().map(|c| c.load()).collect()
}

fn load_one_cuboid(path: &Path) -> Result<LoadedCuboid, CliError> {
    let mut all = load_cuboids(path)?;
    if all.len() != 1 {
        return Err(CliError::Validation(format!(
            "{}: expected one cuboid, found {}",
            path.display(),
            all.len()
        )));
    }
    Ok(all.remove(0))
}

fn synth(a: SynthArgs, stdout: &mut dyn Write) -> Result<String, CliError> {
    let scenes: Vec<Value> = (0..a.count)
        .map(|k| {
            let seed = scene_seed(a.seed, k);
            json::scene_value(&random_scene(seed), k, seed)
        })
        .collect();
    let doc = json!({"count": a.count, "seed": a.seed, "scenes": scenes});
    emit_json(&doc, a.out.as_deref(), stdout)?;
    Ok(format!("wrote {} scenes", a.count))
}

fn loss_entry(c: &LoadedCuboid, target: Option<&LoadedCuboid>) -> Result<Value, CliError> {
    let rel = c.roi_relative(None)?;
    let total = vp_loss(&rel)?;
    let mut per_direction = serde_json::Map::new();
    for d in Direction::ALL {
        per_direction.insert(d.name().into(), json!(vp_loss_direction(&rel, d)?.value));
    }
    let mut v = json!({
        "cq": cuboid_quality(&rel)?,
        "vp_grad": total.grad,
        "vp_loss": total.value,
        "vp_loss_by_direction": per_direction,
    });
    if let Some(t) = target {
        let t_rel = t.roi_relative(c.bbox.as_ref())?;
        let branch = loss_3dbranch(&rel, &t_rel)?;
        v["smooth_l1"] = json!(smooth_l1(&rel.to_flat(), &t_rel.to_flat()).value);
        v["loss_3dbranch"] = json!(branch.value);
        v["grad_3dbranch"] = json!(branch.grad);
    }
    Ok(v)
}

fn loss(a: LossArgs, stdout: &mut dyn Write) -> Result<String, CliError> {
    let cuboids = load_cuboids(&a.cuboid)?;
    let target = a.target.as_deref().map(load_one_cuboid).transpose()?;
    let doc = if cuboids.len() == 1 {
        loss_entry(&cuboids[0], target.as_ref())?
    } else {
        let entries = cuboids
            .iter()
            .map(|c| loss_entry(c, target.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        let max = entries
            .iter()
            .filter_map(|e| e["vp_loss"].as_f64())
            .fold(0.0, f64::max);
        json!({"cuboids": entries, "max_vp_loss": max})
    };
    emit_json(&doc, None, stdout)?;
    Ok(String::new())
}

fn fit(a: FitArgs, stdout: &mut dyn Write) -> Result<String, CliError> {
    let cfg = RefineConfig {
        steps: a.steps,
        learning_rate: a.learning_rate,
        lambda_vp: a.lambda_vp,
        sigma: a.sigma,
    };
    cfg.validate()?;
    let report = match (&a.input, a.count) {
        (Some(path), _) => {
            let scenes = load_cuboids(path)?
                .iter()
                .map(|c| {
                    let bbox = c.bbox.ok_or_else(|| {
                        CliError::Validation("every scene needs a bbox2d".into())
                    })?;
                    Ok((c.image(None)?, bbox))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            study_scenes(&scenes, &cfg, a.seed)?
        }
        (None, Some(n)) => refinement_study(n, &cfg, a.seed)?,
        (None, None) => unreachable!("clap requires --in or --count"),
    };
    emit_json(&json::report_value(&report), a.report.as_deref(), stdout)?;
    Ok(format!("refined {} scenes", report.scenes.len()))
}

fn parse_numbers(s: &str, n: usize, what: &str) -> Result<Vec<f64>, CliError> {
    let values = s
        .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| CliError::Validation(format!("{what}: cannot parse {t:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != n {
        return Err(CliError::Validation(format!(
            "{what}: expected {n} numbers, got {}",
            values.len()
        )));
    }
    Ok(values)
}

fn parse_size(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Validation(format!("--out: expected HxW, got {s:?}"));
    let (h, w) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    if h == 0 || w == 0 {
        return Err(bad());
    }
    Ok((h, w))
}

fn warp(a: WarpArgs, stdout: &mut dyn Write) -> Result<String, CliError> {
    let (out_h, out_w) = parse_size(&a.out)?;
    let bytes = read_bytes(&a.fmap)?;
    let fmap = FeatureMap::read_fmap(&bytes[..])
        .map_err(|e| CliError::Validation(format!("{}: {e}", a.fmap.display())))?;

    let result = if let Some(q) = &a.quad {
        let v = parse_numbers(q, 8, "--quad")?;
        let quad: [Point2; 4] = std::array::from_fn(|i| Point2::new(v[2 * i], v[2 * i + 1]));
        perspective_roi(&fmap, &quad, out_h, out_w)?
    } else if let Some(b) = &a.roi {
        let v = parse_numbers(b, 4, "--box")?;
        let roi = Box2D::new(v[0], v[1], v[2], v[3])?;
        roi_align(&fmap, &roi, out_h, out_w)?
    } else {
        let path = a.cuboid.as_deref().expect("clap enforces a region");
        let face = a.face.expect("clap requires --face with --cuboid");
        let c = load_one_cuboid(path)?.image(None)?;
        let quad = face_quad(&c, face.into())?;
        perspective_roi(&fmap, &quad.corners, out_h, out_w)?
    };
    let mut buf = Vec::new();
    result
        .write_fmap(&mut buf)
        .map_err(|e| CliError::Io(e.to_string()))?;
    emit(&buf, a.to.as_deref(), stdout)?;
    Ok(format!("warped to {out_h}x{out_w}"))
}

fn read_vector(path: &Path) -> Result<Vec<f64>, CliError> {
    Ok(match read_json::<VectorFile>(path)? {
        VectorFile::One(v) => v,
        VectorFile::Parts(parts) => {
            let refs: Vec<&[f64]> = parts.iter().map(Vec::as_slice).collect();
            concat(&refs)
        }
    })
}

fn sketch(a: SketchArgs, stdout: &mut dyn Write) -> Result<String, CliError> {
    let x = read_vector(&a.x)?;
    let y = read_vector(&a.y)?;
    let px = SketchPlan::new(x.len(), a.dim, a.seed)?;
    let py = SketchPlan::new(y.len(), a.dim, a.seed.wrapping_add(1))?;
    let pooled = mcb_pool(&x, &y, &px, &py)?;
    emit_json(&json!(pooled), a.out.as_deref(), stdout)?;
    Ok(String::new())
}

fn metrics(a: MetricsArgs, stdout: &mut dyn Write) -> Result<String, CliError> {
    let pred = load_one_cuboid(&a.pred)?;
    let gt = load_one_cuboid(&a.gt)?;
    let gt_box = gt
        .bbox
        .ok_or_else(|| CliError::Validation("ground truth needs a bbox2d".into()))?;
    let pred_img = pred.image(Some(&gt_box))?;
    let gt_img = gt.image(None)?;
    let frac = pck(&pred_img, &gt_img, &gt_box, &PckConfig { alpha: a.alpha })?;
    let doc = json!({
        "cq_gt": cuboid_quality(&gt.roi_relative(None)?)?,
        "cq_pred": cuboid_quality(&pred.roi_relative(Some(&gt_box))?)?,
        "pck": frac,
    });
    emit_json(&doc, None, stdout)?;
    Ok(String::new())
}

fn verify(a: VerifyArgs, stdout: &mut dyn Write) -> Result<String, CliError> {
    let pairs = match read_json::<PairsFile>(&a.pairs)? {
        PairsFile::Wrapped { pairs } => pairs,
        PairsFile::Bare(p) => p,
    };
    let scores = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let s = match (p.score, &p.a, &p.b) {
                (Some(s), _, _) => s,
                (None, Some(a), Some(b)) => cosine_similarity(a, b)?,
                _ => {
                    return Err(CliError::Validation(format!(
                        "pair {i} needs a score or both a and b"
                    )))
                }
            };
            Ok((s, p.same))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let (points, ap) = pr_curve(&scores)?;
    emit_json(&json::pr_value(&points, ap, scores.len()), a.out.as_deref(), stdout)?;
    Ok(format!("AP {ap}"))
}

fn render(a: RenderArgs, stdout: &mut dyn Write) -> Result<String, CliError> {
    let c = load_one_cuboid(&a.cuboid)?.image(None)?;
    let bg = a
        .background
        .as_deref()
        .map(|p| read_bytes(p).and_then(|b| render::load_ppm(&b)))
        .transpose()?;
    let svg = render::render_svg(&c, bg.as_ref())?;
    emit(svg.as_bytes(), a.out.as_deref(), stdout)?;
    Ok(String::new())
}
