//! Evaluation metrics: vertex error, penetration, contact-part agreement,
//! clustering diversity and the Fréchet distance between feature Gaussians.

mod diversity;
mod features;
mod frechet;
mod report;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{voxelize_and_inside_volume, TriMesh, Vec3};
use crate::geom::winding::inside_unchecked;
use crate::hand::ContactLabel7;

pub use diversity::{assignment_entropy, diversity, diversity_features, kmeans, Diversity, KMeans};
pub use features::{gaussian_fit, p_fid, FeatureExtractor, MOMENTS_V1_DIM};
pub use frechet::frechet_distance;
pub use report::{MetricReport, PFidSummary, SampleMetrics};

/// Granularity of the contacted-part sets compared by P-IoU/P-F1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartGranularity {
    Categories7,
    Parts17,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricOptions {
    /// Voxel edge for penetration volume, mm.
    pub voxel_size: f64,
    pub cell_budget: u64,
    pub kmeans_k: usize,
    pub kmeans_max_iter: usize,
    pub parts: PartGranularity,
    pub extractor: FeatureExtractor,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            voxel_size: 2.0,
            cell_budget: crate::geom::DEFAULT_CELL_BUDGET,
            kmeans_k: 20,
            kmeans_max_iter: 100,
            parts: PartGranularity::Categories7,
            extractor: FeatureExtractor::MomentsV1,
        }
    }
}

impl MetricOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.voxel_size > 0.0) || self.kmeans_k == 0 || self.kmeans_max_iter == 0 {
            return Err(Error::Invalid(format!("invalid metric options {self:?}")));
        }
        Ok(())
    }
}

/// Mean per-vertex position error, mm.
pub fn mpvpe(pred: &[Vec3], gt: &[Vec3]) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::DimensionMismatch(format!("{} predicted vs {} ground-truth vertices", pred.len(), gt.len())));
    }
    if pred.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut s = 0.0;
    for (p, g) in pred.iter().zip(gt) {
        s += (p - g).norm();
    }
    Ok(s / pred.len() as f64)
}

/// Deepest hand vertex inside the object, measured to the object surface, cm.
pub fn penetration_depth(hand: &TriMesh, obj: &TriMesh) -> Result<f64> {
    obj.require_watertight("object mesh must be watertight")?;
    let mut depth = 0.0f64;
    for v in hand.vertices() {
        if inside_unchecked(obj, v) {
            depth = depth.max(obj.distance_to_surface(v));
        }
    }
    Ok(depth / 10.0)
}

/// Object volume enclosed by the hand surface, cm³.
pub fn penetration_volume(hand: &TriMesh, obj: &TriMesh, voxel_size: f64, budget: u64) -> Result<f64> {
    voxelize_and_inside_volume(obj, hand, voxel_size, budget)
}

/// IoU and F1 of two part sets given as bit masks. Both are 1 when the sets
/// are empty and 0 when exactly one is.
pub fn set_iou_f1(pred: u32, gt: u32) -> (f64, f64) {
    if pred == 0 && gt == 0 {
        return (1.0, 1.0);
    }
    let inter = (pred & gt).count_ones() as f64;
    let union = (pred | gt).count_ones() as f64;
    let (np, ng) = (pred.count_ones() as f64, gt.count_ones() as f64);
    let iou = inter / union;
    let f1 = if inter == 0.0 { 0.0 } else { 2.0 * inter / (np + ng) };
    (iou, f1)
}

pub fn part_iou_f1(pred: ContactLabel7, gt: ContactLabel7) -> (f64, f64) {
    set_iou_f1(u32::from(pred.bits()), u32::from(gt.bits()))
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::geom::shapes::{cuboid, icosphere};

    fn label(s: &str) -> ContactLabel7 {
        s.parse().unwrap()
    }

    #[test]
    fn mpvpe_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let gt: Vec<Vec3> = (0..50).map(|_| Vec3::from_fn(|_, _| rng.gen_range(-50.0..50.0))).collect();
        assert_eq!(mpvpe(&gt, &gt).unwrap(), 0.0);
        let shifted: Vec<Vec3> = gt.iter().map(|v| v + Vec3::new(3.0, 4.0, 0.0)).collect();
        assert!((mpvpe(&shifted, &gt).unwrap() - 5.0).abs() < 1e-12);
        let noisy: Vec<Vec3> = gt.iter().map(|v| v + Vec3::from_fn(|_, _| rng.gen_range(-2.0..2.0))).collect();
        let mut expected = 0.0;
        for i in 0..gt.len() {
            let d = noisy[i] - gt[i];
            expected += (d.x * d.x + d.y * d.y + d.z * d.z).sqrt();
        }
        assert!((mpvpe(&noisy, &gt).unwrap() - expected / 50.0).abs() < 1e-12);
        assert!(mpvpe(&gt[1..], &gt).is_err());
    }

    #[test]
    fn depth_cases() {
        let cube = cuboid(Vec3::repeat(-10.0), Vec3::repeat(10.0), 2);
        let far = icosphere(Vec3::new(100.0, 0.0, 0.0), 5.0, 1);
        assert_eq!(penetration_depth(&far, &cube).unwrap(), 0.0);
        // a probe mesh with one vertex at the cube center
        let probe = TriMesh::new(
            vec![Vec3::zeros(), Vec3::new(50.0, 0.0, 0.0), Vec3::new(50.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!((penetration_depth(&probe, &cube).unwrap() - 1.0).abs() < 1e-12);

        let sphere = icosphere(Vec3::zeros(), 50.0, 4);
        let probe = TriMesh::new(
            vec![Vec3::new(48.0, 0.0, 0.0), Vec3::new(90.0, 0.0, 0.0), Vec3::new(90.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let pd = penetration_depth(&probe, &sphere).unwrap();
        assert!((pd - 0.2).abs() <= 0.2 * 0.02, "{pd}");
    }

    #[test]
    fn volume_cases() {
        let a = cuboid(Vec3::zeros(), Vec3::repeat(20.0), 2);
        let b = cuboid(Vec3::new(10.0, 0.0, 0.0), Vec3::new(30.0, 20.0, 20.0), 2);
        let v = penetration_volume(&b, &a, 1.0, 1 << 30).unwrap();
        assert!((v - 4.0).abs() <= 0.2, "{v}");
        let far = cuboid(Vec3::repeat(100.0), Vec3::repeat(110.0), 2);
        assert_eq!(penetration_volume(&far, &a, 1.0, 1 << 30).unwrap(), 0.0);
    }

    #[test]
    fn part_scores() {
        assert_eq!(part_iou_f1(label("0101010"), label("0101010")), (1.0, 1.0));
        let (iou, f1) = part_iou_f1(label("1100000"), label("0110000"));
        assert!((iou - 1.0 / 3.0).abs() < 1e-15);
        assert!((f1 - 0.5).abs() < 1e-15);
        assert_eq!(part_iou_f1(label("0000000"), label("1000000")), (0.0, 0.0));
        assert_eq!(part_iou_f1(label("0000000"), label("0000000")), (1.0, 1.0));
    }

    #[test]
    fn iou_never_exceeds_f1() {
        for p in 1u32..128 {
            for g in 1u32..128 {
                let (iou, f1) = set_iou_f1(p, g);
                assert!(iou <= f1 + 1e-15);
            }
        }
    }
}
