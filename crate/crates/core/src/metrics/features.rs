use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::frechet::frechet_distance;
use crate::error::{Error, Result};
use crate::geom::PointCloud;

pub const MOMENTS_V1_DIM: usize = 35;

const HIST_BINS: usize = 16;
const HIST_RANGE_MM: f64 = 200.0;
const PAIR_SUBSAMPLE: usize = 512;
const SHRINKAGE: f64 = 1e-6;

/// Named deterministic point-cloud descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureExtractor {
    /// Centroid-relative second and third moments (brought back to mm by
    /// signed square and cube roots), a 16-bin pairwise-distance histogram over
    /// 0–200 mm, and mean/std/max of centroid distances.
    #[serde(rename = "moments-v1")]
    MomentsV1,
}

impl FeatureExtractor {
    pub fn name(self) -> &'static str {
        match self {
            Self::MomentsV1 => "moments-v1",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Self::MomentsV1 => MOMENTS_V1_DIM,
        }
    }

    pub fn extract(self, cloud: &PointCloud) -> Vec<f64> {
        match self {
            Self::MomentsV1 => moments_v1(cloud),
        }
    }
}

fn moments_v1(cloud: &PointCloud) -> Vec<f64> {
    let c = cloud.centroid();
    let q: Vec<[f64; 3]> = cloud.points().iter().map(|p| [p.x - c.x, p.y - c.y, p.z - c.z]).collect();
    let n = q.len() as f64;
    let mut out = Vec::with_capacity(MOMENTS_V1_DIM);

    const SECOND: [[usize; 2]; 6] = [[0, 0], [1, 1], [2, 2], [0, 1], [0, 2], [1, 2]];
    for [a, b] in SECOND {
        let m = q.iter().map(|v| v[a] * v[b]).sum::<f64>() / n;
        out.push(m.signum() * m.abs().sqrt());
    }
    const THIRD: [[usize; 3]; 10] = [
        [0, 0, 0], [1, 1, 1], [2, 2, 2], [0, 0, 1], [0, 0, 2],
        [0, 1, 1], [1, 1, 2], [0, 2, 2], [1, 2, 2], [0, 1, 2],
    ];
    for [a, b, d] in THIRD {
        let m = q.iter().map(|v| v[a] * v[b] * v[d]).sum::<f64>() / n;
        out.push(m.cbrt());
    }

    let stride_pick: Vec<usize> = if q.len() > PAIR_SUBSAMPLE {
        (0..PAIR_SUBSAMPLE).map(|i| i * q.len() / PAIR_SUBSAMPLE).collect()
    } else {
        (0..q.len()).collect()
    };
    let mut hist = [0u64; HIST_BINS];
    let mut pairs = 0u64;
    for (ii, &i) in stride_pick.iter().enumerate() {
        for &j in &stride_pick[ii + 1..] {
            let d = ((q[i][0] - q[j][0]).powi(2) + (q[i][1] - q[j][1]).powi(2) + (q[i][2] - q[j][2]).powi(2)).sqrt();
            let bin = ((d / HIST_RANGE_MM * HIST_BINS as f64) as usize).min(HIST_BINS - 1);
            hist[bin] += 1;
            pairs += 1;
        }
    }
    for h in hist {
        out.push(if pairs == 0 { 0.0 } else { h as f64 / pairs as f64 });
    }

    let radii: Vec<f64> = q.iter().map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()).collect();
    let mean = radii.iter().sum::<f64>() / n;
    let var = radii.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let max = radii.iter().copied().fold(0.0, f64::max);
    out.extend([mean, var.sqrt(), max]);
    out
}

/// Mean and unbiased covariance of feature rows. With fewer rows than
/// `dim + 1` the covariance gets `1e-6 · I` added.
pub fn gaussian_fit(features: &[Vec<f64>]) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = features.len();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let dim = features[0].len();
    if features.iter().any(|f| f.len() != dim) {
        return Err(Error::DimensionMismatch("feature rows differ in length".into()));
    }
    let mut mu = DVector::zeros(dim);
    for f in features {
        mu += DVector::from_column_slice(f);
    }
    mu /= n as f64;
    let mut cov = DMatrix::zeros(dim, dim);
    for f in features {
        let d = DVector::from_column_slice(f) - &mu;
        cov += &d * d.transpose();
    }
    if n > 1 {
        cov /= (n - 1) as f64;
    }
    if n < dim + 1 {
        cov += DMatrix::identity(dim, dim) * SHRINKAGE;
    }
    Ok((mu, cov))
}

/// Fréchet distance between Gaussians fitted to the extracted features of two
/// sets of clouds.
pub fn p_fid(set_a: &[PointCloud], set_b: &[PointCloud], extractor: FeatureExtractor) -> Result<f64> {
    let fa: Vec<Vec<f64>> = set_a.iter().map(|c| extractor.extract(c)).collect();
    let fb: Vec<Vec<f64>> = set_b.iter().map(|c| extractor.extract(c)).collect();
    let (ma, ca) = gaussian_fit(&fa)?;
    let (mb, cb) = gaussian_fit(&fb)?;
    frechet_distance(&ma, &ca, &mb, &cb)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::geom::Vec3;

    fn clouds(seed: u64, count: usize) -> Vec<PointCloud> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let spread = Vec3::new(rng.gen_range(10.0..40.0), rng.gen_range(10.0..40.0), rng.gen_range(10.0..40.0));
                let n = rng.gen_range(200..700);
                PointCloud::new(
                    (0..n)
                        .map(|_| Vec3::from_fn(|a, _| rng.gen_range(-1.0..1.0f64).powi(3) * spread[a]))
                        .collect(),
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn descriptor_shape() {
        let set = clouds(1, 3);
        for c in &set {
            let f = FeatureExtractor::MomentsV1.extract(c);
            assert_eq!(f.len(), MOMENTS_V1_DIM);
            assert!(f.iter().all(|v| v.is_finite()));
            let hist: f64 = f[16..32].iter().sum();
            assert!((hist - 1.0).abs() < 1e-12);
            assert_eq!(f, FeatureExtractor::MomentsV1.extract(c));
        }
    }

    #[test]
    fn identical_sets() {
        let a = clouds(2, 12);
        assert!(p_fid(&a, &a, FeatureExtractor::MomentsV1).unwrap().abs() < 1e-9);
        let b = clouds(2, 50);
        assert!(p_fid(&b, &b, FeatureExtractor::MomentsV1).unwrap().abs() < 1e-9);
    }

    #[test]
    fn translation_invariance() {
        let a = clouds(3, 12);
        let t = Vec3::new(12.5, -40.25, 3.0);
        let b: Vec<PointCloud> = a.iter().map(|c| c.map(|p| p + t).unwrap()).collect();
        assert!(p_fid(&a, &b, FeatureExtractor::MomentsV1).unwrap().abs() < 1e-9);
    }

    #[test]
    fn scaling_is_detected() {
        let a = clouds(4, 12);
        let b: Vec<PointCloud> = a.iter().map(|c| c.map(|p| p * 2.0).unwrap()).collect();
        assert!(p_fid(&a, &b, FeatureExtractor::MomentsV1).unwrap() > 0.0);
    }

    #[test]
    fn extractor_name_roundtrip() {
        let json = serde_json::to_string(&FeatureExtractor::MomentsV1).unwrap();
        assert_eq!(json, "\"moments-v1\"");
    }
}
