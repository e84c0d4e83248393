//! C ABI for `vpgeo`.
//!
//! Every function returns a [`VpgeoStatus`]; on failure the message is
//! available from [`vpgeo_last_error`] on the same thread. Objects are
//! opaque handles created by `*_new`-style calls and released with the
//! matching `*_free`. Arrays are passed as pointer plus length, vertex
//! coordinates as 16 doubles `x0, y0, ..., x7, y7`, boxes as `x, y, w, h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use vpgeo::cuboid::{from_roi_relative, to_roi_relative};
use vpgeo::fusion::{count_sketch, mcb_pool, SketchPlan};
use vpgeo::metrics::{cosine_similarity, cuboid_quality, pck, pr_curve, PckConfig};
use vpgeo::refine::{refine_cuboid, RefineConfig};
use vpgeo::synth::random_scene;
use vpgeo::vploss::{loss_3dbranch, smooth_l1, vp_loss, LossValue};
use vpgeo::warp::{dlt_homography, perspective_roi, roi_align};
use vpgeo::{Box2D, Cuboid2D, FeatureMap, Frame, GeomError, Point2};

/// Image pixel coordinates.
pub const VPGEO_FRAME_IMAGE: i32 = 0;
/// Coordinates relative to a 2D box.
pub const VPGEO_FRAME_ROI_RELATIVE: i32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VpgeoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    WrongFrame = 3,
    DimensionMismatch = 4,
    Degenerate = 5,
    Io = 6,
    Panic = 7,
}

/// Opaque 8-vertex cuboid.
pub struct VpgeoCuboid(Cuboid2D);

/// Opaque `H x W x C` feature map.
pub struct VpgeoFeatureMap(FeatureMap);

/// Opaque count-sketch hash plan.
pub struct VpgeoSketchPlan(SketchPlan);

struct Failure(VpgeoStatus, String);

impl From<GeomError> for Failure {
    fn from(e: GeomError) -> Self {
        let status = match e {
            GeomError::InvalidInput(_) | GeomError::NoPositives | GeomError::ZeroVector => {
                VpgeoStatus::InvalidInput
            }
            GeomError::WrongFrame { .. } => VpgeoStatus::WrongFrame,
            GeomError::DimensionMismatch { .. } => VpgeoStatus::DimensionMismatch,
            _ => VpgeoStatus::Degenerate,
        };
        Failure(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> VpgeoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VpgeoStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            VpgeoStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(VpgeoStatus::NullPointer, format!("{what} is null"))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn array<const N: usize>(p: *const f64, what: &str) -> Result<[f64; N], Failure> {
    let s = slice(p, N, what)?;
    Ok(std::array::from_fn(|i| s[i]))
}

unsafe fn read_box(p: *const f64) -> Result<Box2D, Failure> {
    let [x, y, w, h] = array::<4>(p, "box")?;
    Ok(Box2D::new(x, y, w, h)?)
}

unsafe fn read_quad(p: *const f64, what: &str) -> Result<[Point2; 4], Failure> {
    let v = array::<8>(p, what)?;
    Ok(std::array::from_fn(|i| Point2::new(v[2 * i], v[2 * i + 1])))
}

unsafe fn write_loss(l: &LossValue, value: *mut f64, grad: *mut f64) -> Result<(), Failure> {
    *out(value, "value")? = l.value;
    if !grad.is_null() {
        std::slice::from_raw_parts_mut(grad, 16).copy_from_slice(&l.grad);
    }
    Ok(())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn vpgeo_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `coords` points to 16 doubles; `out_cuboid` is valid.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_cuboid_new(
    coords: *const f64,
    frame: i32,
    out_cuboid: *mut *mut VpgeoCuboid,
) -> VpgeoStatus {
    guard(|| {
        let frame = match frame {
            VPGEO_FRAME_IMAGE => Frame::Image,
            VPGEO_FRAME_ROI_RELATIVE => Frame::RoiRelative,
            other => {
                return Err(Failure(VpgeoStatus::InvalidInput, format!("unknown frame {other}")))
            }
        };
        let c = Cuboid2D::from_flat(&array::<16>(coords, "coords")?, frame)?;
        *out(out_cuboid, "out_cuboid")? = boxed(VpgeoCuboid(c));
        Ok(())
    })
}

/// # Safety
/// `c` is NULL or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_cuboid_free(c: *mut VpgeoCuboid) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Writes the 16 coordinates and the frame constant.
///
/// # Safety
/// `coords` has room for 16 doubles; `frame` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_cuboid_get(
    c: *const VpgeoCuboid,
    coords: *mut f64,
    frame: *mut i32,
) -> VpgeoStatus {
    guard(|| {
        let c = &get(c, "cuboid")?.0;
        slice_mut(coords, 16, "coords")?.copy_from_slice(&c.to_flat());
        if let Some(f) = frame.as_mut() {
            *f = match c.frame() {
                Frame::Image => VPGEO_FRAME_IMAGE,
                Frame::RoiRelative => VPGEO_FRAME_ROI_RELATIVE,
            };
        }
        Ok(())
    })
}

/// # Safety
/// `box_xywh` points to 4 doubles; `out_cuboid` is valid.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_cuboid_to_roi_relative(
    c: *const VpgeoCuboid,
    box_xywh: *const f64,
    out_cuboid: *mut *mut VpgeoCuboid,
) -> VpgeoStatus {
    guard(|| {
        let r = to_roi_relative(&get(c, "cuboid")?.0, &read_box(box_xywh)?)?;
        *out(out_cuboid, "out_cuboid")? = boxed(VpgeoCuboid(r));
        Ok(())
    })
}

/// # Safety
/// `box_xywh` points to 4 doubles; `out_cuboid` is valid.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_cuboid_from_roi_relative(
    c: *const VpgeoCuboid,
    box_xywh: *const f64,
    out_cuboid: *mut *mut VpgeoCuboid,
) -> VpgeoStatus {
    guard(|| {
        let r = from_roi_relative(&get(c, "cuboid")?.0, &read_box(box_xywh)?)?;
        *out(out_cuboid, "out_cuboid")? = boxed(VpgeoCuboid(r));
        Ok(())
    })
}

/// Vanishing-point loss of an RoI-relative cuboid. `grad` (16 doubles) may
/// be NULL.
///
/// # Safety
/// Pointers are valid as described.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_vp_loss(
    c: *const VpgeoCuboid,
    value: *mut f64,
    grad: *mut f64,
) -> VpgeoStatus {
    guard(|| write_loss(&vp_loss(&get(c, "cuboid")?.0)?, value, grad))
}

/// # Safety
/// Pointers are valid as described; `grad` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_loss_3dbranch(
    pred: *const VpgeoCuboid,
    target: *const VpgeoCuboid,
    value: *mut f64,
    grad: *mut f64,
) -> VpgeoStatus {
    guard(|| {
        let l = loss_3dbranch(&get(pred, "pred")?.0, &get(target, "target")?.0)?;
        write_loss(&l, value, grad)
    })
}

/// Mean smooth-L1 between two 16-coordinate arrays.
///
/// # Safety
/// `pred` and `target` point to 16 doubles; `grad` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_smooth_l1(
    pred: *const f64,
    target: *const f64,
    value: *mut f64,
    grad: *mut f64,
) -> VpgeoStatus {
    guard(|| {
        let l = smooth_l1(&array::<16>(pred, "pred")?, &array::<16>(target, "target")?);
        write_loss(&l, value, grad)
    })
}

/// # Safety
/// Pointers are valid.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_cuboid_quality(c: *const VpgeoCuboid, cq: *mut f64) -> VpgeoStatus {
    guard(|| {
        *out(cq, "cq")? = cuboid_quality(&get(c, "cuboid")?.0)?;
        Ok(())
    })
}

/// # Safety
/// `box_xywh` points to 4 doubles; other pointers are valid.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_pck(
    pred: *const VpgeoCuboid,
    gt: *const VpgeoCuboid,
    box_xywh: *const f64,
    alpha: f64,
    fraction: *mut f64,
) -> VpgeoStatus {
    guard(|| {
        let v = pck(
            &get(pred, "pred")?.0,
            &get(gt, "gt")?.0,
            &read_box(box_xywh)?,
            &PckConfig { alpha },
        )?;
        *out(fraction, "fraction")? = v;
        Ok(())
    })
}

/// # Safety
/// `a` and `b` point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_cosine_similarity(
    a: *const f64,
    b: *const f64,
    len: usize,
    similarity: *mut f64,
) -> VpgeoStatus {
    guard(|| {
        *out(similarity, "similarity")? = cosine_similarity(slice(a, len, "a")?, slice(b, len, "b")?)?;
        Ok(())
    })
}

/// Step-wise average precision of `len` scored pairs; `same` holds 0 or 1.
///
/// # Safety
/// `scores` and `same` point to `len` elements.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_average_precision(
    scores: *const f64,
    same: *const u8,
    len: usize,
    ap: *mut f64,
) -> VpgeoStatus {
    guard(|| {
        let pairs: Vec<(f64, bool)> = slice(scores, len, "scores")?
            .iter()
            .zip(slice(same, len, "same")?)
            .map(|(&s, &f)| (s, f != 0))
            .collect();
        *out(ap, "ap")? = pr_curve(&pairs)?.1;
        Ok(())
    })
}

/// Homography (row-major, `h[8] == 1`) mapping `dst_corners[i]` to
/// `src_quad[i]`; both are 4 points as 8 doubles.
///
/// # Safety
/// Inputs point to 8 doubles, `h` has room for 9.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_dlt_homography(
    dst_corners: *const f64,
    src_quad: *const f64,
    h: *mut f64,
) -> VpgeoStatus {
    guard(|| {
        let hom = dlt_homography(&read_quad(dst_corners, "dst_corners")?, &read_quad(src_quad, "src_quad")?)?;
        slice_mut(h, 9, "h")?.copy_from_slice(hom.entries());
        Ok(())
    })
}

/// New map from `height * width * channels` row-major, channel-last values;
/// `data` may be NULL for zeros.
///
/// # Safety
/// `data` is NULL or points to the full element count.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_fmap_new(
    height: usize,
    width: usize,
    channels: usize,
    data: *const f64,
    out_map: *mut *mut VpgeoFeatureMap,
) -> VpgeoStatus {
    guard(|| {
        let n = height
            .checked_mul(width)
            .and_then(|v| v.checked_mul(channels))
            .ok_or_else(|| Failure(VpgeoStatus::InvalidInput, "map too large".into()))?;
        let values = if data.is_null() {
            vec![0.0; n]
        } else {
            slice(data, n, "data")?.to_vec()
        };
        let f = FeatureMap::new(height, width, channels, values)?;
        *out(out_map, "out_map")? = boxed(VpgeoFeatureMap(f));
        Ok(())
    })
}

/// Reads an FMAP file.
///
/// # Safety
/// `path` is a nul-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_fmap_read(
    path: *const c_char,
    out_map: *mut *mut VpgeoFeatureMap,
) -> VpgeoStatus {
    guard(|| {
        let path = path_arg(path)?;
        let file = std::fs::File::open(&path)
            .map_err(|e| Failure(VpgeoStatus::Io, format!("{path}: {e}")))?;
        let f = FeatureMap::read_fmap(std::io::BufReader::new(file))
            .map_err(|e| Failure(VpgeoStatus::Io, format!("{path}: {e}")))?;
        *out(out_map, "out_map")? = boxed(VpgeoFeatureMap(f));
        Ok(())
    })
}

/// Writes an FMAP file.
///
/// # Safety
/// `path` is a nul-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_fmap_write(f: *const VpgeoFeatureMap, path: *const c_char) -> VpgeoStatus {
    guard(|| {
        let f = &get(f, "map")?.0;
        let path = path_arg(path)?;
        let mut buf = Vec::new();
        f.write_fmap(&mut buf)
            .and_then(|_| std::fs::write(&path, buf))
            .map_err(|e| Failure(VpgeoStatus::Io, format!("{path}: {e}")))
    })
}

unsafe fn path_arg(p: *const c_char) -> Result<String, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Failure(VpgeoStatus::InvalidInput, "path is not UTF-8".into()))
}

/// # Safety
/// Output pointers may be NULL individually.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_fmap_shape(
    f: *const VpgeoFeatureMap,
    height: *mut usize,
    width: *mut usize,
    channels: *mut usize,
) -> VpgeoStatus {
    guard(|| {
        let f = &get(f, "map")?.0;
        for (p, v) in [(height, f.height()), (width, f.width()), (channels, f.channels())] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Borrowed pointer to the map's values, valid until the map is freed.
///
/// # Safety
/// `f` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_fmap_data(f: *const VpgeoFeatureMap) -> *const f64 {
    f.as_ref().map_or(ptr::null(), |f| f.0.data().as_ptr())
}

/// # Safety
/// `f` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_fmap_free(f: *mut VpgeoFeatureMap) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Warps the quad (8 doubles, corners mapping to the output's TL, TR, BR,
/// BL) onto an `out_h x out_w` map.
///
/// # Safety
/// Pointers are valid as described.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_perspective_roi(
    f: *const VpgeoFeatureMap,
    quad: *const f64,
    out_h: usize,
    out_w: usize,
    out_map: *mut *mut VpgeoFeatureMap,
) -> VpgeoStatus {
    guard(|| {
        let g = perspective_roi(&get(f, "map")?.0, &read_quad(quad, "quad")?, out_h, out_w)?;
        *out(out_map, "out_map")? = boxed(VpgeoFeatureMap(g));
        Ok(())
    })
}

/// # Safety
/// Pointers are valid as described.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_roi_align(
    f: *const VpgeoFeatureMap,
    box_xywh: *const f64,
    out_h: usize,
    out_w: usize,
    out_map: *mut *mut VpgeoFeatureMap,
) -> VpgeoStatus {
    guard(|| {
        let g = roi_align(&get(f, "map")?.0, &read_box(box_xywh)?, out_h, out_w)?;
        *out(out_map, "out_map")? = boxed(VpgeoFeatureMap(g));
        Ok(())
    })
}

/// # Safety
/// `out_plan` is valid.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_sketch_plan_new(
    input_dim: usize,
    output_dim: usize,
    seed: u64,
    out_plan: *mut *mut VpgeoSketchPlan,
) -> VpgeoStatus {
    guard(|| {
        let p = SketchPlan::new(input_dim, output_dim, seed)?;
        *out(out_plan, "out_plan")? = boxed(VpgeoSketchPlan(p));
        Ok(())
    })
}

/// # Safety
/// `p` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_sketch_plan_free(p: *mut VpgeoSketchPlan) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

unsafe fn write_vec(v: &[f64], dst: *mut f64, dst_len: usize) -> Result<(), Failure> {
    if dst_len != v.len() {
        return Err(GeomError::DimensionMismatch {
            expected: v.len(),
            actual: dst_len,
        }
        .into());
    }
    slice_mut(dst, dst_len, "out")?.copy_from_slice(v);
    Ok(())
}

/// `out_len` must equal the plan's output dimension.
///
/// # Safety
/// `x` points to `len` doubles, `out` to `out_len`.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_count_sketch(
    plan: *const VpgeoSketchPlan,
    x: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> VpgeoStatus {
    guard(|| {
        let s = count_sketch(slice(x, len, "x")?, &get(plan, "plan")?.0)?;
        write_vec(&s, out, out_len)
    })
}

/// Compact bilinear pooling; `out_len` must equal the shared output dimension.
///
/// # Safety
/// Arrays hold the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_mcb_pool(
    plan_x: *const VpgeoSketchPlan,
    plan_y: *const VpgeoSketchPlan,
    x: *const f64,
    x_len: usize,
    y: *const f64,
    y_len: usize,
    out: *mut f64,
    out_len: usize,
) -> VpgeoStatus {
    guard(|| {
        let z = mcb_pool(
            slice(x, x_len, "x")?,
            slice(y, y_len, "y")?,
            &get(plan_x, "plan_x")?.0,
            &get(plan_y, "plan_y")?.0,
        )?;
        write_vec(&z, out, out_len)
    })
}

/// Seeded synthetic scene: image-frame cuboid and its 2D box.
///
/// # Safety
/// `out_cuboid` is valid; `box_xywh` has room for 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_random_scene(
    seed: u64,
    out_cuboid: *mut *mut VpgeoCuboid,
    box_xywh: *mut f64,
) -> VpgeoStatus {
    guard(|| {
        let slot = out(out_cuboid, "out_cuboid")?;
        let dst = slice_mut(box_xywh, 4, "box")?;
        let s = random_scene(seed);
        dst.copy_from_slice(&s.bbox.to_array());
        *slot = boxed(VpgeoCuboid(s.cuboid));
        Ok(())
    })
}

/// Gradient-descent refinement of an RoI-relative cuboid. `aborted` (may be
/// NULL) is set to 1 when descent stopped early at the last valid iterate.
///
/// # Safety
/// Pointers are valid as described.
#[no_mangle]
pub unsafe extern "C" fn vpgeo_refine(
    noisy: *const VpgeoCuboid,
    steps: usize,
    learning_rate: f64,
    lambda_vp: f64,
    out_cuboid: *mut *mut VpgeoCuboid,
    aborted: *mut i32,
) -> VpgeoStatus {
    guard(|| {
        let cfg = RefineConfig {
            steps,
            learning_rate,
            lambda_vp,
            ..RefineConfig::default()
        };
        let r = refine_cuboid(&get(noisy, "noisy")?.0, &cfg)?;
        if let Some(a) = aborted.as_mut() {
            *a = i32::from(r.aborted.is_some());
        }
        *out(out_cuboid, "out_cuboid")? = boxed(VpgeoCuboid(r.cuboid));
        Ok(())
    })
}
