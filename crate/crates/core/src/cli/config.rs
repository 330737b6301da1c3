use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::contact::ContactParams;
use crate::error::{Error, Result};
use crate::framepair::SelectionThresholds;
use crate::hand::TemplateConfig;
use crate::metrics::MetricOptions;
use crate::refine::{RefineWeights, TtaConfig};

pub const FORMAT_VERSION: &str = "hoi-1";

/// Everything a run depends on. Missing fields in a config file take their
/// defaults; command-line flags override the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    /// Surface samples drawn when a sample has no object point file.
    pub object_points: usize,
    pub contact: ContactParams,
    pub weights: RefineWeights,
    pub tta: TtaConfig,
    pub selection: SelectionThresholds,
    pub metrics: MetricOptions,
    pub template: TemplateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            jobs: 0,
            object_points: 3000,
            contact: ContactParams::default(),
            weights: RefineWeights::default(),
            tta: TtaConfig::default(),
            selection: SelectionThresholds::default(),
            metrics: MetricOptions::default(),
            template: TemplateConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.object_points == 0 {
            return Err(Error::Invalid("object_points must be at least 1".into()));
        }
        self.contact.validate()?;
        self.weights.validate()?;
        self.tta.validate()?;
        self.selection.validate()?;
        self.metrics.validate()
    }

    /// Seed for item `index` of the named random stream.
    pub fn stream_seed(&self, stream: &str, index: u64) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for b in stream.bytes() {
            h = (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3);
        }
        splitmix(splitmix(self.seed ^ h) ^ index)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Output wrapper carrying provenance next to the payload.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub format_version: &'static str,
    pub config: &'a RunConfig,
    #[serde(flatten)]
    pub body: T,
}

impl<'a, T: Serialize> Envelope<'a, T> {
    pub fn new(config: &'a RunConfig, body: T) -> Self {
        Self { format_version: FORMAT_VERSION, config, body }
    }
}
