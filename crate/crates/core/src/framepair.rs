//! Object-only / interaction frame pairs from mask clips: interaction period,
//! reference frame, per-frame object rotation and overlap, the three-case
//! selection rule and the inpainting mask.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::io::read_pgm;
use crate::geom::{
    estimate_affine_ransac, mask_iou, rotation_angle_from_affine, warp_mask, Affine2, BinaryMask, Point2, RansacParams,
};

/// Matched points: `src` in the reference frame, `dst` in `frame`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correspondences {
    pub frame: usize,
    pub src: Vec<Point2>,
    pub dst: Vec<Point2>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskSequence {
    hands: Vec<BinaryMask>,
    objects: Vec<BinaryMask>,
    correspondences: Vec<Option<Correspondences>>,
}

impl MaskSequence {
    pub fn new(hands: Vec<BinaryMask>, objects: Vec<BinaryMask>, correspondences: Vec<Correspondences>) -> Result<Self> {
        if hands.is_empty() {
            return Err(Error::Invalid("a clip needs at least one frame".into()));
        }
        if hands.len() != objects.len() {
            return Err(Error::DimensionMismatch(format!("{} hand masks vs {} object masks", hands.len(), objects.len())));
        }
        let dims = hands[0].dims();
        if hands.iter().chain(&objects).any(|m| m.dims() != dims) {
            return Err(Error::DimensionMismatch("all masks in a clip must share dimensions".into()));
        }
        let mut per_frame = vec![None; hands.len()];
        for c in correspondences {
            if c.frame >= hands.len() {
                return Err(Error::Invalid(format!("correspondences for frame {} of a {}-frame clip", c.frame, hands.len())));
            }
            if c.src.len() != c.dst.len() {
                return Err(Error::DimensionMismatch(format!("frame {}: {} source vs {} destination points", c.frame, c.src.len(), c.dst.len())));
            }
            let slot = c.frame;
            per_frame[slot] = Some(c);
        }
        Ok(Self { hands, objects, correspondences: per_frame })
    }

    /// Reads `hand_%04d.pgm` / `obj_%04d.pgm` from frame 0 upwards until a
    /// hand mask is missing, plus `correspondences.json` if present.
    pub fn load(dir: &Path) -> Result<Self> {
        let mut hands = Vec::new();
        let mut objects = Vec::new();
        loop {
            let t = hands.len();
            let hp = dir.join(format!("hand_{t:04}.pgm"));
            if !hp.exists() {
                break;
            }
            hands.push(read_pgm(&hp)?);
            objects.push(read_pgm(&dir.join(format!("obj_{t:04}.pgm")))?);
        }
        if hands.is_empty() {
            return Err(Error::Invalid(format!("no hand_0000.pgm in {}", dir.display())));
        }
        let cp = dir.join("correspondences.json");
        let correspondences = if cp.exists() {
            let text = std::fs::read_to_string(&cp).map_err(|e| Error::io(&cp, e))?;
            serde_json::from_str(&text).map_err(|e| Error::parse(&cp, e.to_string()))?
        } else {
            Vec::new()
        };
        Self::new(hands, objects, correspondences)
    }

    pub fn len(&self) -> usize {
        self.hands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hands.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.hands[0].dims()
    }

    pub fn hand(&self, t: usize) -> &BinaryMask {
        &self.hands[t]
    }

    pub fn object(&self, t: usize) -> &BinaryMask {
        &self.objects[t]
    }

    pub fn correspondences(&self, t: usize) -> Option<&Correspondences> {
        self.correspondences[t].as_ref()
    }
}

/// How ΔIoU_t is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaConvention {
    /// `IoU_t − IoU_{t−1}`; the first frame uses the forward difference.
    Backward,
    /// `IoU_{t+1} − IoU_t`; the last frame uses the backward difference.
    Forward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionThresholds {
    /// Degrees.
    pub max_min_angle: f64,
    /// Degrees.
    pub min_max_angle: f64,
    pub dt_iou_thres: f64,
    pub dilation_px: usize,
    pub period_iou_thres: f64,
    pub delta: DeltaConvention,
    pub ransac: RansacParams,
}

impl Default for SelectionThresholds {
    fn default() -> Self {
        Self {
            max_min_angle: 1.0,
            min_max_angle: 5.0,
            dt_iou_thres: 0.02,
            dilation_px: 5,
            period_iou_thres: 0.01,
            delta: DeltaConvention::Backward,
            ransac: RansacParams::default(),
        }
    }
}

impl SelectionThresholds {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_min_angle > 0.0
            && self.min_max_angle > 0.0
            && self.dt_iou_thres > 0.0
            && self.dilation_px > 0
            && self.period_iou_thres > 0.0
            && self.ransac.iterations > 0
            && self.ransac.inlier_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("invalid selection thresholds {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionCase {
    MinAngle,
    StableNearMax,
    ConstrainedNearMax,
}

fn dilated_iou(seq: &MaskSequence, t: usize, r: usize) -> Result<f64> {
    mask_iou(&seq.hands[t].dilate(r), &seq.objects[t].dilate(r))
}

/// Longest run of frames whose dilated hand/object IoU exceeds the period
/// threshold; the earliest run wins ties.
pub fn detect_interaction_period(seq: &MaskSequence, th: &SelectionThresholds) -> Result<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for t in 0..=seq.len() {
        let active = t < seq.len() && dilated_iou(seq, t, th.dilation_px)? > th.period_iou_thres;
        match (active, start) {
            (true, None) => start = Some(t),
            (false, Some(s)) => {
                if best.is_none_or(|(a, b)| t - s > b + 1 - a) {
                    best = Some((s, t - 1));
                }
                start = None;
            }
            _ => {}
        }
    }
    best.ok_or(Error::NoInteraction)
}

/// Nearest frame outside the period whose dilated masks do not overlap at
/// all; the earlier frame wins ties.
pub fn choose_reference_frame(seq: &MaskSequence, period: (usize, usize), th: &SelectionThresholds) -> Result<usize> {
    let mut best: Option<(usize, usize)> = None;
    for t in (0..period.0).chain(period.1 + 1..seq.len()) {
        if dilated_iou(seq, t, th.dilation_px)? != 0.0 {
            continue;
        }
        let dist = if t < period.0 { period.0 - t } else { t - period.1 };
        if best.is_none_or(|(_, d)| dist < d) {
            best = Some((t, dist));
        }
    }
    best.map(|(t, _)| t).ok_or(Error::NoReferenceFrame)
}

/// Object motion from the reference frame to one frame of the period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSignal {
    pub frame: usize,
    pub valid: bool,
    /// Degrees.
    pub theta: f64,
    pub iou: f64,
    pub affine: Option<Affine2>,
    pub inliers: usize,
    pub note: Option<String>,
}

/// Per-frame rotation angle and warped-mask IoU over the period. Frames whose
/// correspondences are missing or degenerate are flagged invalid.
pub fn frame_pose_signals(
    seq: &MaskSequence,
    i_ref: usize,
    period: (usize, usize),
    th: &SelectionThresholds,
    seed: u64,
) -> Result<Vec<FrameSignal>> {
    let dims = seq.dims();
    let reference = &seq.objects[i_ref];
    let mut out = Vec::with_capacity(period.1 + 1 - period.0);
    for t in period.0..=period.1 {
        let invalid = |note: String| FrameSignal { frame: t, valid: false, theta: f64::NAN, iou: f64::NAN, affine: None, inliers: 0, note: Some(note) };
        let Some(c) = seq.correspondences(t) else {
            out.push(invalid("no correspondences".into()));
            continue;
        };
        let fit = estimate_affine_ransac(&c.src, &c.dst, th.ransac.iterations, th.ransac.inlier_tol, seed ^ t as u64)
            .and_then(|(a, n)| rotation_angle_from_affine(&a).map(|theta| (a, n, theta)));
        match fit {
            Ok((a, n, theta)) => {
                let iou = mask_iou(&warp_mask(reference, &a, dims), &seq.objects[t])?;
                out.push(FrameSignal { frame: t, valid: true, theta, iou, affine: Some(a), inliers: n, note: None });
            }
            Err(e) => out.push(invalid(e.to_string())),
        }
    }
    Ok(out)
}

/// First index minimizing `key`.
fn argmin_by(idx: impl Iterator<Item = usize>, key: impl Fn(usize) -> f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in idx {
        let k = key(i);
        if best.is_none_or(|(_, b)| k < b) {
            best = Some((i, k));
        }
    }
    best.map(|(i, _)| i)
}

/// Applies the three-case rule to the frames flagged valid and returns the
/// position of the chosen frame in the input lists.
///
/// (a) every |θ| exceeds `max_min_angle`: smallest |θ|.
/// (b) every |θ| is below `min_max_angle`: the stable frame (|ΔIoU| below
///     `dt_iou_thres`) closest to the IoU peak, or (a) if none is stable.
/// (c) otherwise: the frame with |θ| below `max_min_angle` closest to the IoU
///     peak, or (a) if there is none.
///
/// Distance ties go to the earlier frame.
pub fn select_hoi_frame(theta: &[f64], iou: &[f64], valid: &[bool], th: &SelectionThresholds) -> Result<(usize, SelectionCase)> {
    if theta.len() != iou.len() || theta.len() != valid.len() {
        return Err(Error::DimensionMismatch("signal lists differ in length".into()));
    }
    let frames: Vec<usize> = (0..theta.len()).filter(|&i| valid[i]).collect();
    if frames.is_empty() {
        return Err(Error::NoValidFrames);
    }
    let abs = |i: usize| theta[i].abs();
    let min_angle = frames.iter().map(|&i| abs(i)).fold(f64::INFINITY, f64::min);
    let max_angle = frames.iter().map(|&i| abs(i)).fold(0.0, f64::max);
    let by_min_angle = || (argmin_by(frames.iter().copied(), abs).expect("nonempty"), SelectionCase::MinAngle);
    if min_angle > th.max_min_angle {
        return Ok(by_min_angle());
    }
    let i_max = argmin_by(frames.iter().copied(), |i| -iou[i]).expect("nonempty");
    let nearest_peak = |cands: &[usize]| argmin_by(cands.iter().copied(), |i| (i as f64 - i_max as f64).abs());

    if max_angle < th.min_max_angle {
        let n = frames.len();
        let delta = |k: usize| -> f64 {
            if n == 1 {
                return 0.0;
            }
            let at = |j: usize| iou[frames[j]];
            match th.delta {
                DeltaConvention::Backward if k == 0 => at(1) - at(0),
                DeltaConvention::Backward => at(k) - at(k - 1),
                DeltaConvention::Forward if k == n - 1 => at(k) - at(k - 1),
                DeltaConvention::Forward => at(k + 1) - at(k),
            }
        };
        let stable: Vec<usize> = (0..n).filter(|&k| delta(k).abs() < th.dt_iou_thres).map(|k| frames[k]).collect();
        return Ok(match nearest_peak(&stable) {
            Some(i) => (i, SelectionCase::StableNearMax),
            None => by_min_angle(),
        });
    }
    let small: Vec<usize> = frames.iter().copied().filter(|&i| abs(i) < th.max_min_angle).collect();
    Ok(match nearest_peak(&small) {
        Some(i) => (i, SelectionCase::ConstrainedNearMax),
        None => by_min_angle(),
    })
}

/// The reference object mask carried into the interaction frame.
pub fn make_inpaint_mask(ref_obj_mask: &BinaryMask, a_hoi: &Affine2) -> BinaryMask {
    warp_mask(ref_obj_mask, a_hoi, ref_obj_mask.dims())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePairResult {
    pub i_ref: usize,
    pub i_hoi: usize,
    /// Degrees.
    pub theta: f64,
    pub affine: Affine2,
    pub case_taken: SelectionCase,
    pub period: (usize, usize),
    pub signals: Vec<FrameSignal>,
    #[serde(skip)]
    pub inpaint_mask: Option<BinaryMask>,
}

/// Runs the whole procedure on one clip.
pub fn select_frame_pair(seq: &MaskSequence, th: &SelectionThresholds, seed: u64) -> Result<FramePairResult> {
    th.validate()?;
    let period = detect_interaction_period(seq, th)?;
    let i_ref = choose_reference_frame(seq, period, th)?;
    let signals = frame_pose_signals(seq, i_ref, period, th, seed)?;
    let theta: Vec<f64> = signals.iter().map(|s| s.theta).collect();
    let iou: Vec<f64> = signals.iter().map(|s| s.iou).collect();
    let valid: Vec<bool> = signals.iter().map(|s| s.valid).collect();
    let (k, case_taken) = select_hoi_frame(&theta, &iou, &valid, th)?;
    let chosen = &signals[k];
    let affine = chosen.affine.expect("valid frames carry an affine");
    Ok(FramePairResult {
        i_ref,
        i_hoi: chosen.frame,
        theta: chosen.theta,
        affine,
        case_taken,
        period,
        inpaint_mask: Some(make_inpaint_mask(&seq.objects[i_ref], &affine)),
        signals,
    })
}
