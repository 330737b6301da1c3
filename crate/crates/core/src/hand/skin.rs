//! Forward kinematics and linear blend skinning.
//!
//! Shape scales first stretch the rest skeleton (global scale on every bone
//! offset, per-finger scale on the offsets inside that finger) and carry each
//! vertex with its bones. Pose rotations then compose down the joint tree, and
//! the global rotation (about the wrist, at the origin) and translation are
//! applied last. Every bone ends up as one affine map `x ↦ x + D x + t` on
//! shaped rest vertices (`D = A − I`), which is what the refinement gradients
//! differentiate. Working with displacements keeps the rest pose exact.

use serde::{Deserialize, Serialize};

use super::params::{HandParams, NUM_OPT_PARAMS};
use super::template::{bone_joint, joint_finger, joint_parent, HandTemplate, NUM_BONES, NUM_JOINTS};
use crate::autodiff::{axis_angle_to_matrix, m3_apply, m3_identity, m3_mul, v3_add, v3_sub, Jet, Real, M3, V3};
use crate::geom::Vec3;

/// Skinned vertices and joints, mm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosedHand {
    pub vertices: Vec<Vec3>,
    pub joints: Vec<Vec3>,
}

/// Per-bone affine displacements acting on shaped rest vertices.
#[derive(Debug, Clone)]
pub struct BoneTransforms<T> {
    /// `A_b − I` for the bone's world-space linear part `A_b`.
    pub linear: [M3<T>; NUM_BONES],
    pub offset: [V3<T>; NUM_BONES],
    pub joints: [V3<T>; NUM_JOINTS],
}

/// Rest skeleton and vertices after applying shape scales.
#[derive(Debug, Clone)]
pub struct ShapedRest {
    pub joints: Vec<Vec3>,
    pub vertices: Vec<Vec3>,
}

pub fn shaped_rest(template: &HandTemplate, shape: &[f64; 6]) -> ShapedRest {
    let rest = template.joints();
    if shape.iter().all(|&s| s == 1.0) {
        return ShapedRest { joints: rest.to_vec(), vertices: template.vertices().to_vec() };
    }
    let mut joints = vec![Vec3::zeros(); NUM_JOINTS];
    joints[0] = rest[0];
    for j in 1..NUM_JOINTS {
        let p = joint_parent(j).expect("non-root joint");
        let finger_scale = if p == 0 { 1.0 } else { shape[1 + joint_finger(j).expect("finger joint")] };
        joints[j] = joints[p] + (rest[j] - rest[p]) * (shape[0] * finger_scale);
    }
    let vertices = template
        .vertices()
        .iter()
        .zip(template.sparse_weights())
        .map(|(x, ws)| {
            ws.iter().fold(Vec3::zeros(), |acc, &(b, w)| {
                let j = bone_joint(b);
                acc + ((x - rest[j]) * shape[0] + joints[j]) * w
            })
        })
        .collect();
    ShapedRest { joints, vertices }
}

fn to_v3<T: Real>(v: &Vec3) -> V3<T> {
    [T::cst(v.x), T::cst(v.y), T::cst(v.z)]
}

fn minus_identity<T: Real>(m: &M3<T>) -> M3<T> {
    let mut out = *m;
    for (i, row) in out.iter_mut().enumerate() {
        row[i] = row[i] - T::cst(1.0);
    }
    out
}

/// Bone transforms for the flat parameter vector `[global_rot, trans, pose]`.
pub fn bone_transforms<T: Real>(rest_joints: &[Vec3], opt: &[T; NUM_OPT_PARAMS]) -> BoneTransforms<T> {
    let zero = T::cst(0.0);
    let mut rot: [M3<T>; NUM_JOINTS] = [m3_identity(); NUM_JOINTS];
    // posed joint = rest joint + disp
    let mut disp: [V3<T>; NUM_JOINTS] = [[zero; 3]; NUM_JOINTS];
    let mut local_of_joint: [Option<usize>; NUM_JOINTS] = [None; NUM_JOINTS];
    for b in 1..NUM_BONES {
        local_of_joint[bone_joint(b)] = Some(b - 1);
    }
    for j in 1..NUM_JOINTS {
        let p = joint_parent(j).expect("non-root joint");
        let offset = to_v3::<T>(&(rest_joints[j] - rest_joints[p]));
        disp[j] = v3_add(&disp[p], &m3_apply(&minus_identity(&rot[p]), &offset));
        rot[j] = match local_of_joint[j] {
            Some(k) => {
                let w = [opt[6 + 3 * k], opt[7 + 3 * k], opt[8 + 3 * k]];
                m3_mul(&rot[p], &axis_angle_to_matrix(&w))
            }
            None => rot[p],
        };
    }
    let global = axis_angle_to_matrix(&[opt[0], opt[1], opt[2]]);
    let global_d = minus_identity(&global);
    let trans = [opt[3], opt[4], opt[5]];
    let mut linear = [[[zero; 3]; 3]; NUM_BONES];
    let mut offset = [[zero; 3]; NUM_BONES];
    for b in 0..NUM_BONES {
        let j = bone_joint(b);
        let jr = to_v3::<T>(&rest_joints[j]);
        linear[b] = minus_identity(&m3_mul(&global, &rot[j]));
        // local: x + (R - I)(x - J) + disp_J; world: G(local) + T
        let local_t = v3_sub(&disp[j], &m3_apply(&minus_identity(&rot[j]), &jr));
        offset[b] = v3_add(&m3_apply(&global, &local_t), &trans);
    }
    let joints = std::array::from_fn(|j| {
        let jr = to_v3::<T>(&rest_joints[j]);
        let moved = v3_add(&m3_apply(&global_d, &jr), &m3_apply(&global, &disp[j]));
        v3_add(&jr, &v3_add(&moved, &trans))
    });
    BoneTransforms { linear, offset, joints }
}

/// Applies bone transforms to shaped rest vertices.
pub fn skin_vertices(template: &HandTemplate, rest: &ShapedRest, bones: &BoneTransforms<f64>) -> Vec<Vec3> {
    rest.vertices
        .iter()
        .zip(template.sparse_weights())
        .map(|(x, ws)| {
            let shift = ws.iter().fold(Vec3::zeros(), |acc, &(b, w)| {
                let a = &bones.linear[b];
                let t = &bones.offset[b];
                let y = Vec3::new(
                    a[0][0] * x.x + a[0][1] * x.y + a[0][2] * x.z + t[0],
                    a[1][0] * x.x + a[1][1] * x.y + a[1][2] * x.z + t[1],
                    a[2][0] * x.x + a[2][1] * x.y + a[2][2] * x.z + t[2],
                );
                acc + y * w
            });
            x + shift
        })
        .collect()
}

/// Forward kinematics plus linear blend skinning.
pub fn pose_hand(template: &HandTemplate, params: &HandParams) -> PosedHand {
    let rest = shaped_rest(template, &params.shape);
    pose_with_rest(template, &rest, &params.to_opt_vector())
}

pub fn pose_with_rest(template: &HandTemplate, rest: &ShapedRest, opt: &[f64; NUM_OPT_PARAMS]) -> PosedHand {
    let bones = bone_transforms(&rest.joints, opt);
    let vertices = skin_vertices(template, rest, &bones);
    let joints = bones.joints.iter().map(|j| Vec3::new(j[0], j[1], j[2])).collect();
    PosedHand { vertices, joints }
}

/// Pulls per-vertex loss gradients back to the 51 pose parameters.
pub fn parameter_gradient(
    template: &HandTemplate,
    rest: &ShapedRest,
    opt: &[f64; NUM_OPT_PARAMS],
    vertex_grad: &[Vec3],
) -> [f64; NUM_OPT_PARAMS] {
    // dL/dp = Σ_b <dA_b/dp, Σ_v w g xᵀ> + <dt_b/dp, Σ_v w g>
    let mut outer = [[[0.0; 3]; 3]; NUM_BONES];
    let mut sum = [[0.0; 3]; NUM_BONES];
    for ((x, ws), g) in rest.vertices.iter().zip(template.sparse_weights()).zip(vertex_grad) {
        if g.x == 0.0 && g.y == 0.0 && g.z == 0.0 {
            continue;
        }
        for &(b, w) in ws {
            for r in 0..3 {
                let gw = g[r] * w;
                sum[b][r] += gw;
                for c in 0..3 {
                    outer[b][r][c] += gw * x[c];
                }
            }
        }
    }
    let jets: [Jet<NUM_OPT_PARAMS>; NUM_OPT_PARAMS] = std::array::from_fn(|i| Jet::var(opt[i], i));
    let bones = bone_transforms(&rest.joints, &jets);
    let mut grad = [0.0; NUM_OPT_PARAMS];
    for b in 0..NUM_BONES {
        for r in 0..3 {
            for c in 0..3 {
                let k = outer[b][r][c];
                if k != 0.0 {
                    grad.iter_mut().zip(&bones.linear[b][r][c].d).for_each(|(g, d)| *g += k * d);
                }
            }
            let k = sum[b][r];
            if k != 0.0 {
                grad.iter_mut().zip(&bones.offset[b][r].d).for_each(|(g, d)| *g += k * d);
            }
        }
    }
    grad
}

#[cfg(test)]
mod tests {
    use std::sync::OnceLock;

    use nalgebra::Rotation3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::hand::template::{generate_capsule_hand_template, TemplateConfig};

    fn template() -> &'static HandTemplate {
        static T: OnceLock<HandTemplate> = OnceLock::new();
        T.get_or_init(|| generate_capsule_hand_template(&TemplateConfig::default()).unwrap())
    }

    #[test]
    fn zero_params_reproduce_template() {
        let posed = pose_hand(template(), &HandParams::default());
        assert_eq!(posed.vertices, template().vertices());
        assert_eq!(posed.joints, template().joints());
    }

    #[test]
    fn pure_translation() {
        let mut p = HandParams::default();
        p.trans = [10.0, 0.0, 0.0];
        let posed = pose_hand(template(), &p);
        for (a, b) in posed.vertices.iter().zip(template().vertices()) {
            assert!((a - b - Vec3::new(10.0, 0.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn global_rotation_is_rigid() {
        let mut p = HandParams::default();
        p.global_rot = [0.0, 0.0, std::f64::consts::FRAC_PI_2];
        let posed = pose_hand(template(), &p);
        let r = Rotation3::from_axis_angle(&Vec3::z_axis(), std::f64::consts::FRAC_PI_2);
        for (a, b) in posed.vertices.iter().zip(template().vertices()) {
            assert!((a - r * b).norm() < 1e-6);
        }
    }

    #[test]
    fn bone_rotation_leaves_unweighted_vertices() {
        let mut p = HandParams::default();
        // index DIP (bone 6 -> pose slot 5)
        p.pose[5] = [0.7, 0.1, -0.2];
        let posed = pose_hand(template(), &p);
        let mut moved = 0;
        for (i, (a, b)) in posed.vertices.iter().zip(template().vertices()).enumerate() {
            if template().weights()[i][6] == 0.0 {
                assert!((a - b).norm() < 1e-9);
            } else {
                moved += 1;
            }
        }
        assert!(moved > 0);
    }

    #[test]
    fn uniform_scale_scales_joint_distances() {
        let mut p = HandParams::default();
        p.shape[0] = 1.3;
        let posed = pose_hand(template(), &p);
        let rest = template().joints();
        for i in 0..NUM_JOINTS {
            for j in 0..i {
                let want = (rest[i] - rest[j]).norm() * 1.3;
                assert!(((posed.joints[i] - posed.joints[j]).norm() - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn parameter_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut p = HandParams::default();
        p.global_rot = [0.3, -0.2, 0.1];
        p.trans = [5.0, -3.0, 2.0];
        for aa in &mut p.pose {
            *aa = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
        }
        let t = template();
        let rest = shaped_rest(t, &p.shape);
        let weights: Vec<Vec3> = (0..t.vertex_count())
            .map(|_| Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        // L = Σ_v c_v · v is linear in the vertices, so dL/dv = c_v
        let loss = |opt: &[f64; NUM_OPT_PARAMS]| -> f64 {
            pose_with_rest(t, &rest, opt).vertices.iter().zip(&weights).map(|(v, c)| v.dot(c)).sum()
        };
        let x = p.to_opt_vector();
        let g = parameter_gradient(t, &rest, &x, &weights);
        for i in 0..NUM_OPT_PARAMS {
            let h = 1e-5;
            let (mut xp, mut xm) = (x, x);
            xp[i] += h;
            xm[i] -= h;
            let fd = (loss(&xp) - loss(&xm)) / (2.0 * h);
            assert!((g[i] - fd).abs() <= 1e-5 * fd.abs().max(1.0), "param {i}: {} vs {fd}", g[i]);
        }
    }
}
