//! Synthetic scenes with known ground truth: a sphere resting against the
//! palm of a posed hand, and mask clips of a rigidly moving object.

use std::path::{Path, PathBuf};

use nalgebra::Rotation3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::contact::{compute_contact_maps, ContactMap, ContactParams};
use crate::error::{Error, Result};
use crate::framepair::Correspondences;
use crate::geom::io::{write_obj, write_pgm, write_xyz};
use crate::geom::shapes::icosphere;
use crate::geom::{Affine2, BinaryMask, Point2, PointCloud, TriMesh, Vec3};
use crate::hand::{pose_hand, HandParams, HandTemplate, NUM_POSE_BONES};

/// Sphere held against the palm, with contact maps derived from the
/// ground-truth pose.
#[derive(Debug, Clone)]
pub struct SyntheticGrasp {
    pub params: HandParams,
    pub mesh: TriMesh,
    pub cloud: PointCloud,
    pub hand_contact: ContactMap,
    pub object_contact: ContactMap,
}

fn random_axis(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Builds a grasp scene: random global pose and mild finger flexion, and a
/// sphere 0.5 mm below the palm center.
pub fn synthetic_grasp(template: &HandTemplate, seed: u64, object_points: usize) -> Result<SyntheticGrasp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = HandParams::default();
    params.global_rot = (random_axis(&mut rng) * rng.gen_range(0.0..0.5)).into();
    params.trans = Vec3::from_fn(|_, _| rng.gen_range(-50.0..50.0)).into();
    for b in 0..NUM_POSE_BONES {
        params.pose[b][0] = rng.gen_range(0.0..0.25);
    }
    let radius = rng.gen_range(25.0..35.0);

    let palm_min_y = template.vertices().iter().map(|v| v.y).fold(f64::INFINITY, f64::min);
    let local_center = Vec3::new(0.0, palm_min_y - radius - 0.5, 45.0);
    let rot = Rotation3::from_scaled_axis(Vec3::from(params.global_rot));
    let center = rot * local_center + Vec3::from(params.trans);
    let mesh = icosphere(center, radius, 3);
    let cloud = mesh.sample_surface(object_points, &mut rng)?;

    let posed = pose_hand(template, &params);
    let hand_cloud = PointCloud::new(posed.vertices)?;
    let (object_contact, hand_contact) = compute_contact_maps(&cloud, &hand_cloud, &ContactParams::default())?;
    Ok(SyntheticGrasp { params, mesh, cloud, hand_contact, object_contact })
}

/// Ground-truth pose moved by a random translation of length in
/// `trans_range` (mm) and uniform joint noise of amplitude `joint_noise` (rad).
pub fn perturb_params(gt: &HandParams, seed: u64, trans_range: (f64, f64), joint_noise: f64) -> HandParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = gt.clone();
    let t = random_axis(&mut rng) * rng.gen_range(trans_range.0..=trans_range.1);
    for a in 0..3 {
        p.trans[a] += t[a];
    }
    if joint_noise > 0.0 {
        for aa in &mut p.pose {
            for v in aa.iter_mut() {
                *v += rng.gen_range(-joint_noise..=joint_noise);
            }
        }
    }
    p
}

/// Rigidly moving elliptical object with a hand disc that overlaps it on
/// frames `interaction.0..=interaction.1`.
#[derive(Debug, Clone)]
pub struct SyntheticClip {
    pub hands: Vec<BinaryMask>,
    pub objects: Vec<BinaryMask>,
    /// Object motion from frame 0 to each frame.
    pub motions: Vec<Affine2>,
}

/// The object rotates by `degrees_per_frame` about its center on every
/// interaction frame and stays still before and after. The hand disc sits far away
/// outside the interaction frames and on the object inside them.
pub fn synthetic_clip(
    frames: usize,
    interaction: (usize, usize),
    degrees_per_frame: f64,
    dims: (usize, usize),
) -> Result<SyntheticClip> {
    let (w, h) = dims;
    let center: Point2 = [w as f64 * 0.5, h as f64 * 0.5];
    let (ax, ay) = (w as f64 * 0.22, h as f64 * 0.12);
    let base = BinaryMask::from_fn(w, h, |x, y| {
        let dx = (x as f64 - center[0]) / ax;
        let dy = (y as f64 - center[1]) / ay;
        dx * dx + dy * dy <= 1.0 || (dx > 0.3 && dx < 0.7 && (y as f64) < center[1] && (y as f64) > center[1] - 1.8 * ay)
    });
    let mut hands = Vec::with_capacity(frames);
    let mut objects = Vec::with_capacity(frames);
    let mut motions = Vec::with_capacity(frames);
    for t in 0..frames {
        let steps = if t < interaction.0 { 0 } else { (t + 1 - interaction.0).min(interaction.1 + 1 - interaction.0) };
        let a = Affine2::rotation_about(degrees_per_frame * steps as f64, center);
        objects.push(crate::geom::warp_mask(&base, &a, dims));
        motions.push(a);
        let active = t >= interaction.0 && t <= interaction.1;
        let (hx, hy, r) = if active {
            (center[0] - ax * 0.5, center[1], h as f64 * 0.08)
        } else {
            (w as f64 * 0.06, h as f64 * 0.06, h as f64 * 0.04)
        };
        hands.push(BinaryMask::from_fn(w, h, |x, y| {
            let dx = x as f64 - hx;
            let dy = y as f64 - hy;
            dx * dx + dy * dy <= r * r
        }));
    }
    Ok(SyntheticClip { hands, objects, motions })
}

/// Correspondences from frame `i_ref` to frame `t` consistent with the clip's
/// true motion: `n` points inside the reference object mask, noise uniform
/// in `±noise_px`, and a leading fraction of random outliers.
pub fn synthetic_correspondences(
    clip: &SyntheticClip,
    i_ref: usize,
    t: usize,
    n: usize,
    outlier_fraction: f64,
    noise_px: f64,
    seed: u64,
) -> Correspondences {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = &clip.objects[i_ref];
    let (w, h) = mask.dims();
    let inside: Vec<Point2> =
        (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).filter(|&(x, y)| mask.get(x, y)).map(|(x, y)| [x as f64, y as f64]).collect();
    let rel = clip.motions[t].compose(&clip.motions[i_ref].inverse());
    let mut src = Vec::with_capacity(n);
    let mut dst = Vec::with_capacity(n);
    for k in 0..n {
        let p = inside[rng.gen_range(0..inside.len())];
        let q = if (k as f64) < outlier_fraction * n as f64 {
            [rng.gen_range(0.0..w as f64), rng.gen_range(0.0..h as f64)]
        } else {
            let q = rel.apply(p);
            let jitter = |rng: &mut ChaCha8Rng| if noise_px > 0.0 { rng.gen_range(-noise_px..noise_px) } else { 0.0 };
            [q[0] + jitter(&mut rng), q[1] + jitter(&mut rng)]
        };
        src.push(p);
        dst.push(q);
    }
    Correspondences { frame: t, src, dst }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `n` synthetic grasps and a `manifest.jsonl` listing them into
/// `dir`. Predictions are the ground truth shifted by `pred_offset` mm
/// (`(0, 0)` gives prediction = ground truth) with `joint_noise` rad on
/// every pose angle. Returns the manifest path.
pub fn write_grasp_fixture(
    dir: &Path,
    template: &HandTemplate,
    n: usize,
    seed: u64,
    object_points: usize,
    pred_offset: (f64, f64),
    joint_noise: f64,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::new();
    for i in 0..n {
        let id = format!("s{i:03}");
        let g = synthetic_grasp(template, seed.wrapping_add(i as u64), object_points)?;
        let pred = if pred_offset.1 > 0.0 || joint_noise > 0.0 {
            perturb_params(&g.params, seed.wrapping_add(1000 + i as u64), pred_offset, joint_noise)
        } else {
            g.params.clone()
        };
        write_obj(&dir.join(format!("{id}.obj")), &g.mesh)?;
        write_xyz(&dir.join(format!("{id}.xyz")), &g.cloud)?;
        write_json(&dir.join(format!("{id}_gt.json")), &g.params)?;
        write_json(&dir.join(format!("{id}_pred.json")), &pred)?;
        let line = serde_json::json!({
            "id": id,
            "object_mesh": format!("{id}.obj"),
            "object_points": format!("{id}.xyz"),
            "gt_params": format!("{id}_gt.json"),
            "pred_params": format!("{id}_pred.json"),
        });
        manifest.push_str(&line.to_string());
        manifest.push('\n');
    }
    let path = dir.join("manifest.jsonl");
    std::fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes a clip in the layout read by `MaskSequence::load`.
pub fn write_clip(dir: &Path, clip: &SyntheticClip, correspondences: &[Correspondences]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (t, (h, o)) in clip.hands.iter().zip(&clip.objects).enumerate() {
        write_pgm(&dir.join(format!("hand_{t:04}.pgm")), h)?;
        write_pgm(&dir.join(format!("obj_{t:04}.pgm")), o)?;
    }
    write_json(&dir.join("correspondences.json"), &correspondences)
}
