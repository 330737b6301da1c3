//! Physical-constraint refinement of hand poses against an object: contact,
//! penetration, joint-limit, self-penetration and cycle-consistency losses,
//! their exact parameter gradients, and the test-time Adam loop.

mod losses;
mod problem;
mod tta;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hand::NUM_POSE_BONES;

pub use losses::{
    loss_anatomy, loss_contact, loss_cycle, loss_penetration, loss_self_penetration, SelfContactGraph,
};
pub use problem::{check_gradients, total_refine_loss, RefineProblem, RefineScene};
pub use tta::{tta_refine, TtaResult};

/// Loss weights. `lambda_simple` and `lambda_global` belong to network
/// training and are carried for completeness only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineWeights {
    pub lambda_simple: f64,
    pub lambda_global: f64,
    pub lambda_pene: f64,
    pub lambda_contact: f64,
    pub lambda_cyc: f64,
    pub lambda_self: f64,
    pub lambda_anatomy: f64,
}

impl Default for RefineWeights {
    fn default() -> Self {
        Self {
            lambda_simple: 5.0,
            lambda_global: 0.1,
            lambda_pene: 100.0,
            lambda_contact: 100.0,
            lambda_cyc: 10.0,
            lambda_self: 10000.0,
            lambda_anatomy: 0.1,
        }
    }
}

impl RefineWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.lambda_simple,
            self.lambda_global,
            self.lambda_pene,
            self.lambda_contact,
            self.lambda_cyc,
            self.lambda_self,
            self.lambda_anatomy,
        ];
        if all.iter().all(|w| w.is_finite() && *w >= 0.0) {
            Ok(())
        } else {
            Err(Error::Invalid(format!("loss weights must be finite and nonnegative: {self:?}")))
        }
    }
}

/// Per-DOF pose bounds in radians, `[bone][axis]`; axis x flexes toward the
/// palm, y abducts, z twists along the finger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointLimits {
    pub lo: [[f64; 3]; NUM_POSE_BONES],
    pub hi: [[f64; 3]; NUM_POSE_BONES],
}

impl Default for JointLimits {
    fn default() -> Self {
        Self { lo: [[-0.3, -0.35, -0.15]; NUM_POSE_BONES], hi: [[1.6, 0.35, 0.15]; NUM_POSE_BONES] }
    }
}

impl JointLimits {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lo.iter().flatten().zip(self.hi.iter().flatten()).all(|(l, h)| l.is_finite() && h.is_finite() && l <= h);
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid("joint limits need finite lo <= hi".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMode {
    /// Forward-mode dual numbers through the kinematic chain.
    Exact,
    /// Central differences with step `1e-4` times the parameter scale.
    CentralDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TtaConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Translation per optimizer unit, mm.
    pub translation_unit: f64,
    pub gradient: GradientMode,
    /// Self-penetration distance margin, mm.
    pub self_margin: f64,
    pub joint_limits: JointLimits,
}

impl Default for TtaConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            learning_rate: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            translation_unit: 10.0,
            gradient: GradientMode::Exact,
            self_margin: 2.0,
            joint_limits: JointLimits::default(),
        }
    }
}

impl TtaConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.iterations >= 1
            && self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0
            && self.translation_unit > 0.0
            && self.self_margin > 0.0;
        if !ok {
            return Err(Error::Invalid(format!("invalid refinement config {self:?}")));
        }
        self.joint_limits.validate()
    }

    /// Scale of each optimized parameter: 1 rad for rotations and the
    /// translation unit for translations.
    pub(crate) fn parameter_scale(&self, i: usize) -> f64 {
        if (3..6).contains(&i) {
            self.translation_unit
        } else {
            1.0
        }
    }
}

/// Unweighted loss terms and their weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub contact: f64,
    pub pene: f64,
    pub anatomy: f64,
    #[serde(rename = "self")]
    pub self_pen: f64,
    pub cyc: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn weighted(contact: f64, pene: f64, anatomy: f64, self_pen: f64, cyc: f64, w: &RefineWeights) -> Self {
        let total = w.lambda_contact * contact
            + w.lambda_pene * pene
            + w.lambda_anatomy * anatomy
            + w.lambda_self * self_pen
            + w.lambda_cyc * cyc;
        Self { contact, pene, anatomy, self_pen, cyc, total }
    }

    pub const CSV_HEADER: &'static str = "iteration,total,contact,pene,anatomy,self,cyc";

    pub fn csv_row(&self, iteration: usize) -> String {
        format!(
            "{iteration},{},{},{},{},{},{}",
            self.total, self.contact, self.pene, self.anatomy, self.self_pen, self.cyc
        )
    }
}
