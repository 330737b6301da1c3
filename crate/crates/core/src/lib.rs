//! Non-neural computational core for hand-object interaction data: robust
//! contact maps, penetration and diversity metrics, test-time pose refinement
//! over a skinned hand, and frame-pair selection for in-the-wild clips.

pub mod autodiff;
pub mod cli;
pub mod contact;
pub mod error;
pub mod framepair;
pub mod geom;
pub mod hand;
pub mod metrics;
pub mod refine;
pub mod synth;

pub use error::{Error, Result};
