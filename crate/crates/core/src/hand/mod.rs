//! Skinned parametric hand: template generation, posing, part labels.

pub mod params;
pub mod parts;
pub mod skin;
pub mod template;

pub use params::{HandParams, NUM_OPT_PARAMS, NUM_POSE_BONES};
pub use parts::{balance_resample, contact_label7, contact_parts17, ContactLabel7, FingerPart, PartLabel17};
pub use skin::{pose_hand, PosedHand};
pub use template::{generate_capsule_hand_template, HandTemplate, TemplateConfig, NUM_BONES, NUM_JOINTS};
