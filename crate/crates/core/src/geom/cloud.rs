use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::error::{Error, Result};

/// A nonempty set of finite 3D points, in millimeters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 3]>", into = "Vec<[f64; 3]>")]
pub struct PointCloud {
    points: Vec<Vec3>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Invalid("point cloud must contain at least one point".into()));
        }
        if let Some(i) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::Invalid(format!("point {i} has a non-finite coordinate")));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Vec3 {
        let sum = self.points.iter().fold(Vec3::zeros(), |acc, p| acc + p);
        sum / self.points.len() as f64
    }

    /// Applies `f` to every point.
    pub fn map(&self, f: impl Fn(&Vec3) -> Vec3) -> Result<Self> {
        Self::new(self.points.iter().map(f).collect())
    }

    pub fn into_points(self) -> Vec<Vec3> {
        self.points
    }
}

impl TryFrom<Vec<[f64; 3]>> for PointCloud {
    type Error = Error;

    fn try_from(raw: Vec<[f64; 3]>) -> Result<Self> {
        Self::new(raw.into_iter().map(Vec3::from).collect())
    }
}

impl From<PointCloud> for Vec<[f64; 3]> {
    fn from(cloud: PointCloud) -> Self {
        cloud.points.iter().map(|p| [p.x, p.y, p.z]).collect()
    }
}

/// Squared Euclidean distance, summed in x, y, z order.
#[inline]
pub fn dist2(a: &Vec3, b: &Vec3) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(PointCloud::new(vec![]).is_err());
        assert!(PointCloud::new(vec![Vec3::new(0.0, f64::NAN, 0.0)]).is_err());
        assert!(PointCloud::new(vec![Vec3::new(0.0, 1.0, 2.0)]).is_ok());
    }

    #[test]
    fn serde_as_nested_arrays() {
        let cloud = PointCloud::new(vec![Vec3::new(1.0, 2.0, 3.0)]).unwrap();
        let json = serde_json::to_string(&cloud).unwrap();
        assert_eq!(json, "[[1.0,2.0,3.0]]");
        let back: PointCloud = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cloud);
        assert!(serde_json::from_str::<PointCloud>("[]").is_err());
    }
}
