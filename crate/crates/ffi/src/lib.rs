//! C ABI over the core library.
//!
//! Every fallible call returns a [`HoiStatus`]; on failure the message is
//! kept per thread and read back with [`hoi_last_error_message`]. Arrays are
//! caller-allocated, points are packed `x, y, z` triples in mm, and matrices
//! are row-major.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use hoi_core::contact::{compute_contact_maps, ContactParams};
use hoi_core::framepair::{select_hoi_frame, SelectionCase, SelectionThresholds};
use hoi_core::geom::{rotation_angle_from_affine, Affine2, PointCloud, Vec3};
use hoi_core::hand::{generate_capsule_hand_template, pose_hand, HandParams, HandTemplate, TemplateConfig, NUM_JOINTS};
use hoi_core::metrics::frechet_distance;
use hoi_core::Error;
use nalgebra::{DMatrix, DVector};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    EmptySample = 3,
    DimensionMismatch = 4,
    Degenerate = 5,
    NoInteraction = 6,
    NoValidFrames = 7,
    Diverged = 8,
    Io = 9,
    Internal = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoiSelectionCase {
    MinAngle = 0,
    StableNearMax = 1,
    ConstrainedNearMax = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HoiHandParams {
    pub global_rot: [f64; 3],
    pub trans: [f64; 3],
    pub pose: [f64; 45],
    pub shape: [f64; 6],
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HoiContactParams {
    pub alpha: f64,
    pub beta: f64,
    pub eps: f64,
    pub gamma: f64,
    pub k: usize,
    pub min_hits: usize,
}

/// Thresholds of the interaction-frame rule, angles in degrees.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HoiSelectionThresholds {
    pub max_min_angle: f64,
    pub min_max_angle: f64,
    pub dt_iou_thres: f64,
}

/// Opaque hand template.
pub struct HoiTemplate {
    inner: HandTemplate,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(HoiStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::EmptySample => HoiStatus::EmptySample,
            Error::DimensionMismatch(_) => HoiStatus::DimensionMismatch,
            Error::OpenSurface(_)
            | Error::Underdetermined(_)
            | Error::DegenerateCorrespondences
            | Error::SingularLinearPart => HoiStatus::Degenerate,
            Error::NoInteraction | Error::NoReferenceFrame => HoiStatus::NoInteraction,
            Error::NoValidFrames => HoiStatus::NoValidFrames,
            Error::Diverged { .. } => HoiStatus::Diverged,
            Error::Io { .. } | Error::Parse { .. } | Error::Json(_) => HoiStatus::Io,
            _ => HoiStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(HoiStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HoiStatus {
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err(Failure(HoiStatus::Internal, "internal panic".into())));
    match result {
        Ok(()) => {
            LAST_ERROR.with(|e| e.borrow_mut().clear());
            HoiStatus::Ok
        }
        Err(Failure(status, msg)) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = msg);
            status
        }
    }
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a, T>(ptr: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn cloud(ptr: *const f64, n: usize, what: &str) -> Result<PointCloud, Failure> {
    let xyz = slice(ptr, 3 * n, what)?;
    Ok(PointCloud::new(xyz.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect())?)
}

fn pack(points: &[Vec3], out: &mut [f64]) {
    for (p, o) in points.iter().zip(out.chunks_exact_mut(3)) {
        o.copy_from_slice(&[p.x, p.y, p.z]);
    }
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`) and returns the full message
/// length in bytes excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hoi_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

#[no_mangle]
pub extern "C" fn hoi_contact_params_default() -> HoiContactParams {
    let p = ContactParams::default();
    HoiContactParams { alpha: p.alpha, beta: p.beta, eps: p.eps, gamma: p.gamma, k: p.k, min_hits: p.min_hits }
}

#[no_mangle]
pub extern "C" fn hoi_selection_thresholds_default() -> HoiSelectionThresholds {
    let t = SelectionThresholds::default();
    HoiSelectionThresholds { max_min_angle: t.max_min_angle, min_max_angle: t.min_max_angle, dt_iou_thres: t.dt_iou_thres }
}

/// Identity rotation, zero translation and pose, unit shape.
#[no_mangle]
pub extern "C" fn hoi_hand_params_default() -> HoiHandParams {
    HoiHandParams { global_rot: [0.0; 3], trans: [0.0; 3], pose: [0.0; 45], shape: [1.0; 6] }
}

/// Builds the default capsule hand template into `*out`; release it with
/// [`hoi_template_free`].
///
/// # Safety
/// `out` must be null or a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn hoi_template_new(out: *mut *mut HoiTemplate) -> HoiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = generate_capsule_hand_template(&TemplateConfig::default())?;
        *out = Box::into_raw(Box::new(HoiTemplate { inner }));
        Ok(())
    })
}

/// # Safety
/// `t` must be null or a handle from [`hoi_template_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hoi_template_free(t: *mut HoiTemplate) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// # Safety
/// `t` must be null or a live template handle.
#[no_mangle]
pub unsafe extern "C" fn hoi_template_vertex_count(t: *const HoiTemplate) -> usize {
    t.as_ref().map_or(0, |t| t.inner.vertex_count())
}

/// # Safety
/// `t` must be null or a live template handle.
#[no_mangle]
pub unsafe extern "C" fn hoi_template_face_count(t: *const HoiTemplate) -> usize {
    t.as_ref().map_or(0, |t| t.inner.mesh().faces().len())
}

#[no_mangle]
pub extern "C" fn hoi_joint_count() -> usize {
    NUM_JOINTS
}

/// Writes `3 * face_count` vertex indices.
///
/// # Safety
/// `t` must be a live handle and `out` must hold `3 * face_count` values.
#[no_mangle]
pub unsafe extern "C" fn hoi_template_faces(t: *const HoiTemplate, out: *mut u32) -> HoiStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("template"))?;
        let faces = t.inner.mesh().faces();
        let out = slice_mut(out, 3 * faces.len(), "out")?;
        for (f, o) in faces.iter().zip(out.chunks_exact_mut(3)) {
            for (v, s) in f.iter().zip(o) {
                *s = u32::try_from(*v).map_err(|_| Failure(HoiStatus::Internal, "face index overflow".into()))?;
            }
        }
        Ok(())
    })
}

/// Poses the template. `out_vertices` receives `3 * vertex_count` values,
/// `out_joints` (nullable) `3 * 21`.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn hoi_pose_hand(
    t: *const HoiTemplate,
    params: *const HoiHandParams,
    out_vertices: *mut f64,
    out_joints: *mut f64,
) -> HoiStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("template"))?;
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let mut pose = [[0.0; 3]; 15];
        for (b, c) in pose.iter_mut().zip(p.pose.chunks_exact(3)) {
            b.copy_from_slice(c);
        }
        let hp = HandParams { global_rot: p.global_rot, trans: p.trans, pose, shape: p.shape };
        hp.validate()?;
        let posed = pose_hand(&t.inner, &hp);
        pack(&posed.vertices, slice_mut(out_vertices, 3 * posed.vertices.len(), "out_vertices")?);
        if !out_joints.is_null() {
            pack(&posed.joints, slice_mut(out_joints, 3 * posed.joints.len(), "out_joints")?);
        }
        Ok(())
    })
}

/// Contact maps of an object and a hand point cloud as 0/1 bytes.
/// `params` may be null for the defaults.
///
/// # Safety
/// `obj`/`hand` hold `3 * n` values; `out_obj`/`out_hand` hold `n_obj` and
/// `n_hand` bytes.
#[no_mangle]
pub unsafe extern "C" fn hoi_contact_maps(
    obj: *const f64,
    n_obj: usize,
    hand: *const f64,
    n_hand: usize,
    params: *const HoiContactParams,
    out_obj: *mut u8,
    out_hand: *mut u8,
) -> HoiStatus {
    guard(|| {
        let p = match params.as_ref() {
            Some(c) => ContactParams { alpha: c.alpha, beta: c.beta, eps: c.eps, gamma: c.gamma, k: c.k, min_hits: c.min_hits },
            None => ContactParams::default(),
        };
        let (o, h) = (cloud(obj, n_obj, "obj")?, cloud(hand, n_hand, "hand")?);
        let (co, ch) = compute_contact_maps(&o, &h, &p)?;
        for (dst, &b) in slice_mut(out_obj, n_obj, "out_obj")?.iter_mut().zip(co.bits()) {
            *dst = u8::from(b);
        }
        for (dst, &b) in slice_mut(out_hand, n_hand, "out_hand")?.iter_mut().zip(ch.bits()) {
            *dst = u8::from(b);
        }
        Ok(())
    })
}

/// Fréchet distance between two Gaussians of dimension `dim`; covariances
/// are `dim * dim` row-major.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn hoi_frechet_distance(
    dim: usize,
    mu_a: *const f64,
    cov_a: *const f64,
    mu_b: *const f64,
    cov_b: *const f64,
    out: *mut f64,
) -> HoiStatus {
    guard(|| {
        if dim == 0 {
            return Err(Failure(HoiStatus::InvalidArgument, "dimension must be positive".into()));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let vec = |p, w| -> Result<DVector<f64>, Failure> { Ok(DVector::from_column_slice(slice(p, dim, w)?)) };
        let mat = |p, w| -> Result<DMatrix<f64>, Failure> { Ok(DMatrix::from_row_slice(dim, dim, slice(p, dim * dim, w)?)) };
        *out = frechet_distance(&vec(mu_a, "mu_a")?, &mat(cov_a, "cov_a")?, &vec(mu_b, "mu_b")?, &mat(cov_b, "cov_b")?)?;
        Ok(())
    })
}

/// Rotation angle in degrees of a 2×3 row-major affine.
///
/// # Safety
/// `affine` holds 6 values; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hoi_rotation_angle(affine: *const f64, out: *mut f64) -> HoiStatus {
    guard(|| {
        let m = slice(affine, 6, "affine")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let a = Affine2::new([[m[0], m[1], m[2]], [m[3], m[4], m[5]]])?;
        *out = rotation_angle_from_affine(&a)?;
        Ok(())
    })
}

/// Interaction-frame rule over per-frame angles (degrees) and IoUs.
/// `valid` (nullable, nonzero = valid) and `thresholds` (nullable) default
/// to all-valid and the standard thresholds.
///
/// # Safety
/// Arrays hold `n` values; outputs are writable.
#[no_mangle]
pub unsafe extern "C" fn hoi_select_hoi_frame(
    n: usize,
    theta: *const f64,
    iou: *const f64,
    valid: *const u8,
    thresholds: *const HoiSelectionThresholds,
    out_index: *mut usize,
    out_case: *mut HoiSelectionCase,
) -> HoiStatus {
    guard(|| {
        let theta = slice(theta, n, "theta")?;
        let iou = slice(iou, n, "iou")?;
        let valid: Vec<bool> = if valid.is_null() { vec![true; n] } else { slice(valid, n, "valid")?.iter().map(|&v| v != 0).collect() };
        let mut th = SelectionThresholds::default();
        if let Some(t) = thresholds.as_ref() {
            th.max_min_angle = t.max_min_angle;
            th.min_max_angle = t.min_max_angle;
            th.dt_iou_thres = t.dt_iou_thres;
        }
        th.validate()?;
        let out_index = out_index.as_mut().ok_or_else(|| null("out_index"))?;
        let out_case = out_case.as_mut().ok_or_else(|| null("out_case"))?;
        let (i, case) = select_hoi_frame(theta, iou, &valid, &th)?;
        *out_index = i;
        *out_case = match case {
            SelectionCase::MinAngle => HoiSelectionCase::MinAngle,
            SelectionCase::StableNearMax => HoiSelectionCase::StableNearMax,
            SelectionCase::ConstrainedNearMax => HoiSelectionCase::ConstrainedNearMax,
        };
        Ok(())
    })
}
