use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contact::ContactMap;
use crate::error::{Error, Result};
use crate::geom::io::{read_obj, read_xyz};
use crate::geom::{PointCloud, TriMesh};
use crate::hand::HandParams;

/// One line of a manifest. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub object_mesh: PathBuf,
    #[serde(default)]
    pub object_points: Option<PathBuf>,
    /// Surface samples to draw when `object_points` is absent.
    #[serde(default)]
    pub object_samples: Option<usize>,
    pub gt_params: PathBuf,
    #[serde(default)]
    pub pred_params: Option<PathBuf>,
    #[serde(default)]
    pub hand_contact: Option<PathBuf>,
    #[serde(default)]
    pub object_contact: Option<PathBuf>,
    #[serde(default)]
    pub action: Option<String>,
    /// Object files hold normalized coordinates; multiplying by `scale`
    /// recovers millimeters.
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub dir: PathBuf,
    pub records: Vec<SampleRecord>,
}

impl Manifest {
    /// Parses line-delimited JSON; blank lines are skipped.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut records = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r: SampleRecord =
                serde_json::from_str(line).map_err(|e| Error::parse(path, format!("line {}: {e}", n + 1)))?;
            records.push(r);
        }
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { dir, records })
    }
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
}

/// A record with its files read.
pub struct LoadedSample {
    pub mesh: TriMesh,
    pub cloud: PointCloud,
    pub gt: HandParams,
    pub pred: Option<HandParams>,
    pub hand_contact: Option<ContactMap>,
    pub object_contact: Option<ContactMap>,
}

impl SampleRecord {
    pub fn load(&self, dir: &Path, sampling_seed: u64, default_samples: usize) -> Result<LoadedSample> {
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::Invalid(format!("sample {}: scale must be positive", self.id)));
        }
        let s = self.scale;
        let mesh = read_obj(&dir.join(&self.object_mesh))?.transformed(|v| v * s);
        let cloud = match &self.object_points {
            Some(p) => read_xyz(&dir.join(p))?.map(|v| v * s)?,
            None => {
                let n = self.object_samples.unwrap_or(default_samples);
                mesh.sample_surface(n, &mut ChaCha8Rng::seed_from_u64(sampling_seed))?
            }
        };
        let params = |p: &Path| -> Result<HandParams> {
            let h: HandParams = read_json(&dir.join(p))?;
            h.validate()?;
            Ok(h)
        };
        let gt = params(&self.gt_params)?;
        let pred = self.pred_params.as_deref().map(params).transpose()?;
        let map = |p: &Path| read_json::<ContactMap>(&dir.join(p));
        Ok(LoadedSample {
            mesh,
            cloud,
            gt,
            pred,
            hand_contact: self.hand_contact.as_deref().map(map).transpose()?,
            object_contact: self.object_contact.as_deref().map(map).transpose()?,
        })
    }
}
