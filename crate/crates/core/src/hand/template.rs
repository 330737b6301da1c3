//! Canonical skinned hand built from a box palm and five capsule fingers.
//!
//! Layout in the canonical frame (mm): the wrist joint sits at the origin,
//! fingers extend along +z, the palmar side faces −y and the thumb lies on the
//! −x side. Each finger is one closed tube (hemispherical caps, rings along
//! the axis) and the palm is a subdivided box; the shells are separated by a
//! small gap so the rest pose has no self-contact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::parts::{FingerPart, PartLabel17};
use crate::geom::shapes::cuboid_grid;
use crate::geom::{TriMesh, Vec3};
use crate::error::{Error, Result};

pub const NUM_JOINTS: usize = 21;
pub const NUM_BONES: usize = 16;

/// Joint driven by articulated bone `b` (0 is the wrist, then three per finger).
pub fn bone_joint(b: usize) -> usize {
    if b == 0 {
        0
    } else {
        1 + 4 * ((b - 1) / 3) + (b - 1) % 3
    }
}

/// Finger index of joint `j`, `None` for the wrist.
pub fn joint_finger(j: usize) -> Option<usize> {
    (j > 0).then(|| (j - 1) / 4)
}

pub fn joint_parent(j: usize) -> Option<usize> {
    match j {
        0 => None,
        j if (j - 1) % 4 == 0 => Some(0),
        j => Some(j - 1),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TemplateConfig {
    pub palm_width: f64,
    pub palm_length: f64,
    pub palm_thickness: f64,
    /// Clearance between finger tubes and the palm box.
    pub finger_gap: f64,
    /// Tube radius per finger, thumb first.
    pub finger_radius: [f64; 5],
    /// Phalanx lengths per finger, proximal first.
    pub segment_lengths: [[f64; 3]; 5],
    /// x position of the index..pinky finger axes.
    pub finger_offsets_x: [f64; 4],
    pub thumb_base_z: f64,
    /// Thumb axis angle from +z toward −x, degrees.
    pub thumb_angle_deg: f64,
    pub ring_resolution: usize,
    pub ring_spacing: f64,
    pub cap_rings: usize,
    pub palm_spacing: f64,
    pub seed: u64,
    /// Uniform per-vertex jitter amplitude in mm; 0 disables it.
    pub jitter: f64,
}

impl Default for TemplateConfig {
    fn default() -> Self {
        Self {
            palm_width: 80.0,
            palm_length: 90.0,
            palm_thickness: 25.0,
            finger_gap: 3.0,
            finger_radius: [9.0, 8.0, 8.0, 7.5, 6.5],
            segment_lengths: [
                [35.0, 30.0, 25.0],
                [40.0, 25.0, 20.0],
                [44.0, 28.0, 22.0],
                [41.0, 27.0, 21.0],
                [33.0, 20.0, 18.0],
            ],
            finger_offsets_x: [-30.0, -10.0, 10.0, 30.0],
            thumb_base_z: 25.0,
            thumb_angle_deg: 30.0,
            ring_resolution: 10,
            ring_spacing: 5.0,
            cap_rings: 3,
            palm_spacing: 10.0,
            seed: 0,
            jitter: 0.0,
        }
    }
}

/// Rest-pose hand: mesh, joints, skinning weights and part labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TemplateFile", into = "TemplateFile")]
pub struct HandTemplate {
    mesh: TriMesh,
    joints: Vec<Vec3>,
    weights: Vec<[f64; NUM_BONES]>,
    labels: Vec<PartLabel17>,
    sparse: Vec<Vec<(usize, f64)>>,
}

#[derive(Serialize, Deserialize)]
struct TemplateFile {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
    joints: Vec<[f64; 3]>,
    parents: Vec<Option<usize>>,
    weights: Vec<Vec<f64>>,
    labels: Vec<PartLabel17>,
}

impl TryFrom<TemplateFile> for HandTemplate {
    type Error = Error;

    fn try_from(f: TemplateFile) -> Result<Self> {
        let expected: Vec<Option<usize>> = (0..NUM_JOINTS).map(joint_parent).collect();
        if f.parents != expected {
            return Err(Error::Invalid("template joint tree does not match the 21-joint hand".into()));
        }
        let weights = f
            .weights
            .iter()
            .map(|row| {
                <[f64; NUM_BONES]>::try_from(row.as_slice())
                    .map_err(|_| Error::Invalid(format!("weight rows need {NUM_BONES} entries")))
            })
            .collect::<Result<_>>()?;
        let mesh = TriMesh::new(f.vertices.into_iter().map(Vec3::from).collect(), f.faces)?;
        HandTemplate::new(mesh, f.joints.into_iter().map(Vec3::from).collect(), weights, f.labels)
    }
}

impl From<HandTemplate> for TemplateFile {
    fn from(t: HandTemplate) -> Self {
        TemplateFile {
            vertices: t.mesh.vertices().iter().map(|v| [v.x, v.y, v.z]).collect(),
            faces: t.mesh.faces().to_vec(),
            joints: t.joints.iter().map(|v| [v.x, v.y, v.z]).collect(),
            parents: (0..NUM_JOINTS).map(joint_parent).collect(),
            weights: t.weights.iter().map(|w| w.to_vec()).collect(),
            labels: t.labels,
        }
    }
}

impl HandTemplate {
    pub fn new(
        mesh: TriMesh,
        joints: Vec<Vec3>,
        weights: Vec<[f64; NUM_BONES]>,
        labels: Vec<PartLabel17>,
    ) -> Result<Self> {
        let n = mesh.vertices().len();
        if joints.len() != NUM_JOINTS {
            return Err(Error::Invalid(format!("template needs {NUM_JOINTS} joints, got {}", joints.len())));
        }
        if weights.len() != n || labels.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} vertices, {} weight rows, {} labels",
                weights.len(),
                labels.len()
            )));
        }
        mesh.require_watertight("hand template mesh must be watertight")?;
        for (i, row) in weights.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&w| !(w >= 0.0)) || (sum - 1.0).abs() > 1e-6 {
                return Err(Error::Invalid(format!("weight row {i} is not a convex combination")));
            }
        }
        let mut seen = [false; PartLabel17::COUNT];
        labels.iter().for_each(|l| seen[l.index()] = true);
        if !seen.iter().all(|&s| s) {
            return Err(Error::Invalid("template must use all 17 part labels".into()));
        }
        let sparse = weights
            .iter()
            .map(|row| row.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(b, &w)| (b, w)).collect())
            .collect();
        Ok(Self { mesh, joints, weights, labels, sparse })
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn vertices(&self) -> &[Vec3] {
        self.mesh.vertices()
    }

    pub fn vertex_count(&self) -> usize {
        self.mesh.vertices().len()
    }

    pub fn joints(&self) -> &[Vec3] {
        &self.joints
    }

    pub fn weights(&self) -> &[[f64; NUM_BONES]] {
        &self.weights
    }

    /// Nonzero `(bone, weight)` pairs per vertex.
    pub fn sparse_weights(&self) -> &[Vec<(usize, f64)>] {
        &self.sparse
    }

    pub fn part_labels(&self) -> &[PartLabel17] {
        &self.labels
    }
}

struct Shell {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
}

/// Closed tube from `start` along `dir` for `length`, with hemispherical caps.
/// Returns the shell plus each vertex's axial coordinate and dorsal/palmar
/// side (`cos ψ` against `up`; the poles get ±axis sentinels).
fn capsule_tube(
    start: Vec3,
    dir: Vec3,
    up: Vec3,
    radius: f64,
    length: f64,
    cfg: &TemplateConfig,
) -> (Shell, Vec<(f64, f64)>) {
    let n = cfg.ring_resolution.max(3);
    let side = dir.cross(&up);
    let mut rings: Vec<(f64, f64)> = Vec::new(); // (axial offset of center, ring radius)
    let caps = cfg.cap_rings.max(1);
    for k in 1..caps {
        let phi = std::f64::consts::FRAC_PI_2 * k as f64 / caps as f64;
        rings.push((-radius * phi.cos(), radius * phi.sin()));
    }
    let segments = ((length / cfg.ring_spacing).ceil() as usize).max(1);
    for i in 0..=segments {
        rings.push((length * i as f64 / segments as f64, radius));
    }
    for k in (1..caps).rev() {
        let phi = std::f64::consts::FRAC_PI_2 * k as f64 / caps as f64;
        rings.push((length + radius * phi.cos(), radius * phi.sin()));
    }

    let mut vertices = vec![start - dir * radius];
    let mut meta = vec![(-radius, f64::NAN)];
    for &(s, r) in &rings {
        for i in 0..n {
            let psi = std::f64::consts::TAU * i as f64 / n as f64;
            vertices.push(start + dir * s + (up * psi.cos() + side * psi.sin()) * r);
            meta.push((s, psi.cos()));
        }
    }
    vertices.push(start + dir * (length + radius));
    meta.push((length + radius, f64::NAN));

    let tip = vertices.len() - 1;
    let ring = |k: usize, i: usize| 1 + k * n + i % n;
    let mut faces = Vec::new();
    for i in 0..n {
        faces.push([0, ring(0, i + 1), ring(0, i)]);
    }
    for k in 0..rings.len() - 1 {
        for i in 0..n {
            faces.push([ring(k, i), ring(k, i + 1), ring(k + 1, i + 1)]);
            faces.push([ring(k, i), ring(k + 1, i + 1), ring(k + 1, i)]);
        }
    }
    let last = rings.len() - 1;
    for i in 0..n {
        faces.push([ring(last, i), ring(last, i + 1), tip]);
    }
    let mut shell = Shell { vertices, faces };
    orient_outward(&mut shell);
    (shell, meta)
}

fn orient_outward(shell: &mut Shell) {
    let vol: f64 = shell
        .faces
        .iter()
        .map(|&[a, b, c]| shell.vertices[a].dot(&shell.vertices[b].cross(&shell.vertices[c])))
        .sum();
    if vol < 0.0 {
        shell.faces.iter_mut().for_each(|f| f.swap(1, 2));
    }
}

fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Generates the canonical hand. Generation is deterministic; `cfg.seed` only
/// drives the optional vertex jitter.
pub fn generate_capsule_hand_template(cfg: &TemplateConfig) -> Result<HandTemplate> {
    let positive = [cfg.palm_width, cfg.palm_length, cfg.palm_thickness, cfg.ring_spacing, cfg.palm_spacing]
        .iter()
        .chain(cfg.finger_radius.iter())
        .chain(cfg.segment_lengths.iter().flatten())
        .all(|&v| v > 0.0 && v.is_finite());
    if !positive || cfg.finger_gap < 0.0 || cfg.jitter < 0.0 {
        return Err(Error::Invalid("template lengths and radii must be positive".into()));
    }

    let (hw, ht, len) = (cfg.palm_width / 2.0, cfg.palm_thickness / 2.0, cfg.palm_length);
    let counts = [cfg.palm_width, cfg.palm_thickness, cfg.palm_length].map(|d| (d / cfg.palm_spacing).ceil() as usize);
    let palm = cuboid_grid(Vec3::new(-hw, -ht, 0.0), Vec3::new(hw, ht, len), counts);

    let mut joints = vec![Vec3::zeros(); NUM_JOINTS];
    let up = Vec3::y();
    let mut vertices: Vec<Vec3> = palm.vertices().to_vec();
    let mut faces: Vec<[usize; 3]> = palm.faces().to_vec();
    let mut weights: Vec<[f64; NUM_BONES]> = Vec::with_capacity(vertices.len());
    let mut labels: Vec<PartLabel17> = Vec::with_capacity(vertices.len());
    for v in palm.vertices() {
        let mut w = [0.0; NUM_BONES];
        w[0] = 1.0;
        weights.push(w);
        labels.push(if v.y < 0.0 { PartLabel17::PALM } else { PartLabel17::BACK });
    }

    for f in 0..5 {
        let r = cfg.finger_radius[f];
        let (start, dir) = if f == 0 {
            let a = cfg.thumb_angle_deg.to_radians();
            (Vec3::new(-hw - cfg.finger_gap - r, -ht + r, cfg.thumb_base_z), Vec3::new(-a.sin(), 0.0, a.cos()))
        } else {
            (Vec3::new(cfg.finger_offsets_x[f - 1], -ht + r, len + cfg.finger_gap + r), Vec3::z())
        };
        let lengths = cfg.segment_lengths[f];
        let mut s = 0.0;
        joints[1 + 4 * f] = start;
        for (k, l) in lengths.iter().enumerate() {
            s += l;
            joints[2 + 4 * f + k] = start + dir * s;
        }
        let total: f64 = lengths.iter().sum();
        let (shell, meta) = capsule_tube(start, dir, up, r, total, cfg);
        let base = vertices.len();
        for (v, &(axial, cos_psi)) in shell.vertices.iter().zip(&meta) {
            let dists: Vec<f64> = (0..3)
                .map(|k| point_segment_distance(v, &joints[1 + 4 * f + k], &joints[2 + 4 * f + k]))
                .collect();
            let mut order = [0usize, 1, 2];
            order.sort_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(a.cmp(&b)));
            let mut w = [0.0; NUM_BONES];
            let bone = |k: usize| 1 + 3 * f + k;
            if dists[order[0]] == 0.0 {
                w[bone(order[0])] = 1.0;
            } else {
                let (i0, i1) = (1.0 / dists[order[0]], 1.0 / dists[order[1]]);
                w[bone(order[0])] = i0 / (i0 + i1);
                w[bone(order[1])] = i1 / (i0 + i1);
            }
            weights.push(w);

            let distal = axial >= lengths[0] + lengths[1];
            let dorsal = if cos_psi.is_nan() { axial < 0.0 } else { cos_psi > 0.0 };
            let part = match (distal, dorsal) {
                (true, true) => FingerPart::Nail,
                (false, true) => FingerPart::Knuckle,
                (_, false) => FingerPart::Pad,
            };
            labels.push(PartLabel17::finger(f, part));
        }
        vertices.extend_from_slice(&shell.vertices);
        faces.extend(shell.faces.iter().map(|t| t.map(|i| i + base)));
    }

    if cfg.jitter > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for v in &mut vertices {
            *v += Vec3::from_fn(|_, _| rng.gen_range(-cfg.jitter..=cfg.jitter));
        }
    }

    let mesh = TriMesh::new(vertices, faces).map_err(|e| Error::TemplateGeneration(e.to_string()))?;
    if !mesh.is_watertight() {
        return Err(Error::TemplateGeneration("generated mesh is not a closed manifold".into()));
    }
    HandTemplate::new(mesh, joints, weights, labels).map_err(|e| Error::TemplateGeneration(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::winding_number;

    #[test]
    fn default_template_properties() {
        let t = generate_capsule_hand_template(&TemplateConfig::default()).unwrap();
        assert!(t.vertex_count() > 500);
        let mut seen = [false; 17];
        t.part_labels().iter().for_each(|l| seen[l.index()] = true);
        assert!(seen.iter().all(|&s| s));
        for row in t.weights() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
        assert!(t.mesh().is_watertight());
        assert!(t.mesh().signed_volume() > 0.0);
    }

    #[test]
    fn seeds_do_not_change_default_template() {
        let a = generate_capsule_hand_template(&TemplateConfig { seed: 1, ..Default::default() }).unwrap();
        let b = generate_capsule_hand_template(&TemplateConfig { seed: 99, ..Default::default() }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn joints_lie_inside_the_mesh() {
        let t = generate_capsule_hand_template(&TemplateConfig::default()).unwrap();
        for (j, p) in t.joints().iter().enumerate().skip(1) {
            assert!(winding_number(t.mesh(), p) > 0.5, "joint {j}");
        }
    }

    #[test]
    fn json_roundtrip() {
        let t = generate_capsule_hand_template(&TemplateConfig::default()).unwrap();
        let json = serde_json::to_string(&t).unwrap();
        let back: HandTemplate = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = TemplateConfig::default();
        cfg.finger_radius[2] = -1.0;
        assert!(generate_capsule_hand_template(&cfg).is_err());
    }

    #[test]
    fn skeleton_tables() {
        assert_eq!(bone_joint(0), 0);
        assert_eq!(bone_joint(1), 1);
        assert_eq!(bone_joint(3), 3);
        assert_eq!(bone_joint(4), 5);
        assert_eq!(bone_joint(15), 19);
        assert_eq!(joint_parent(5), Some(0));
        assert_eq!(joint_parent(8), Some(7));
        assert_eq!(joint_finger(20), Some(4));
    }
}
