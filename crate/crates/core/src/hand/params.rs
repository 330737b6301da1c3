use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_POSE_BONES: usize = 15;
pub const NUM_SHAPE: usize = 6;
/// Length of the optimized parameter vector: global rotation, translation, pose.
pub const NUM_OPT_PARAMS: usize = 3 + 3 + 3 * NUM_POSE_BONES;

/// Hand configuration: global axis-angle rotation about the wrist, translation
/// in mm, one local axis-angle per articulated bone, and shape scales
/// `[global, thumb, index, middle, ring, pinky]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandParams {
    pub global_rot: [f64; 3],
    pub trans: [f64; 3],
    pub pose: [[f64; 3]; NUM_POSE_BONES],
    pub shape: [f64; NUM_SHAPE],
}

impl Default for HandParams {
    fn default() -> Self {
        Self { global_rot: [0.0; 3], trans: [0.0; 3], pose: [[0.0; 3]; NUM_POSE_BONES], shape: [1.0; NUM_SHAPE] }
    }
}

impl HandParams {
    pub fn validate(&self) -> Result<()> {
        let finite = self
            .global_rot
            .iter()
            .chain(&self.trans)
            .chain(self.pose.iter().flatten())
            .chain(&self.shape)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Invalid("hand parameters must be finite".into()));
        }
        if let Some(s) = self.shape.iter().find(|s| !(0.5..=2.0).contains(*s)) {
            return Err(Error::Invalid(format!("shape scale {s} outside [0.5, 2.0]")));
        }
        Ok(())
    }

    /// `[global_rot, trans, pose...]` as one flat vector.
    pub fn to_opt_vector(&self) -> [f64; NUM_OPT_PARAMS] {
        let mut v = [0.0; NUM_OPT_PARAMS];
        v[..3].copy_from_slice(&self.global_rot);
        v[3..6].copy_from_slice(&self.trans);
        for (b, aa) in self.pose.iter().enumerate() {
            v[6 + 3 * b..9 + 3 * b].copy_from_slice(aa);
        }
        v
    }

    /// Inverse of [`Self::to_opt_vector`], keeping `shape`.
    pub fn with_opt_vector(&self, v: &[f64; NUM_OPT_PARAMS]) -> Self {
        let mut p = self.clone();
        p.global_rot.copy_from_slice(&v[..3]);
        p.trans.copy_from_slice(&v[3..6]);
        for (b, aa) in p.pose.iter_mut().enumerate() {
            aa.copy_from_slice(&v[6 + 3 * b..9 + 3 * b]);
        }
        p
    }
}
