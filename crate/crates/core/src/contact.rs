//! Four-stage robust contact maps between a hand and an object point cloud.
//!
//! 1. Votes: every point votes for its nearest neighbor in the other cloud.
//! 2. Candidates: points whose vote count reaches the upper `alpha` quantile.
//! 3. Core: candidates whose cross-cloud distance is below both the `beta`
//!    quantile of candidate distances and the absolute threshold `eps`.
//! 4. Expansion: every point within `gamma · d̄` of a core point, where `d̄` is
//!    the mean distance to the `k` nearest neighbors inside the same cloud.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::quantile::quantile_sorted;
use crate::geom::{PointCloud, SpatialIndex, Vec3};
use crate::hand::{contact_label7, ContactLabel7, PartLabel17};

/// Thresholds of the contact algorithm. Distances in mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContactParams {
    pub alpha: f64,
    pub beta: f64,
    pub eps: f64,
    pub gamma: f64,
    pub k: usize,
    /// Contact vertices a category needs before its label bit is set.
    pub min_hits: usize,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self { alpha: 0.10, beta: 0.50, eps: 5.0, gamma: 2.0, k: 8, min_hits: 3 }
    }
}

impl ContactParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha > 0.0
            && self.alpha < 1.0
            && self.beta > 0.0
            && self.beta < 1.0
            && self.eps > 0.0
            && self.gamma >= 0.0
            && self.k >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("invalid contact parameters {self:?}")))
        }
    }
}

/// Binary per-point contact indicator, serialized as an array of 0/1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<u8>", into = "Vec<u8>")]
pub struct ContactMap {
    bits: Vec<bool>,
}

impl ContactMap {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![false; n] }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }
}

impl From<Vec<u8>> for ContactMap {
    fn from(v: Vec<u8>) -> Self {
        Self { bits: v.into_iter().map(|b| b != 0).collect() }
    }
}

impl From<ContactMap> for Vec<u8> {
    fn from(m: ContactMap) -> Self {
        m.bits.into_iter().map(u8::from).collect()
    }
}

/// Joint-to-object-point distances, one row per joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMap {
    pub rows: Vec<Vec<f64>>,
}

/// Stage outputs for one side of the contact computation.
#[derive(Debug, Clone, PartialEq)]
pub struct SideStages {
    pub votes: Vec<usize>,
    /// Nearest-neighbor distance to the other cloud.
    pub cross_distance: Vec<f64>,
    pub candidates: Vec<usize>,
    pub core: Vec<usize>,
    pub mean_knn: f64,
    pub map: ContactMap,
}

/// Both sides of the computation, object first.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactStages {
    pub object: SideStages,
    pub hand: SideStages,
}

/// Stage 1: `(vote_o, vote_h)`.
pub fn bidirectional_votes(obj: &PointCloud, hand: &PointCloud) -> (Vec<usize>, Vec<usize>) {
    let obj_index = SpatialIndex::new(obj);
    let hand_index = SpatialIndex::new(hand);
    let (vote_o, _) = votes_from(hand, &obj_index);
    let (vote_h, _) = votes_from(obj, &hand_index);
    (vote_o, vote_h)
}

/// Votes cast by `voters` on the indexed cloud, and each voter's NN distance.
fn votes_from(voters: &PointCloud, target: &SpatialIndex) -> (Vec<usize>, Vec<f64>) {
    let mut votes = vec![0usize; target.len()];
    let dist = voters
        .points()
        .iter()
        .map(|p| {
            let (i, d) = target.nearest(p);
            votes[i] += 1;
            d
        })
        .collect();
    (votes, dist)
}

/// Mean over points of the mean distance to their `k` nearest neighbors in
/// the same cloud (fewer when the cloud is smaller; 0 for a single point).
/// Neighbor distances are summed in ascending order.
pub fn mean_knn_distance(index: &SpatialIndex, k: usize) -> f64 {
    let n = index.len();
    let kk = k.min(n - 1);
    if kk == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        let nn = index.k_nearest(index.point(i), kk, Some(i));
        let mut s = 0.0;
        for &(_, d) in &nn {
            s += d;
        }
        total += s / kk as f64;
    }
    total / n as f64
}

fn side_stages(
    points: &PointCloud,
    own_index: &SpatialIndex,
    votes: Vec<usize>,
    cross_distance: Vec<f64>,
    p: &ContactParams,
) -> SideStages {
    let mut sorted_votes: Vec<f64> = votes.iter().map(|&v| v as f64).collect();
    sorted_votes.sort_by(f64::total_cmp);
    let vote_threshold = quantile_sorted(&sorted_votes, 1.0 - p.alpha);
    let candidates: Vec<usize> = (0..votes.len()).filter(|&i| votes[i] as f64 >= vote_threshold).collect();

    let mut cand_d: Vec<f64> = candidates.iter().map(|&i| cross_distance[i]).collect();
    cand_d.sort_by(f64::total_cmp);
    let core: Vec<usize> = if cand_d.is_empty() {
        Vec::new()
    } else {
        let threshold = quantile_sorted(&cand_d, p.beta).min(p.eps);
        candidates.iter().copied().filter(|&i| cross_distance[i] < threshold).collect()
    };

    let mean_knn = mean_knn_distance(own_index, p.k);
    let map = if core.is_empty() {
        ContactMap::zeros(points.len())
    } else {
        let core_index = SpatialIndex::from_points(core.iter().map(|&i| points.points()[i]).collect());
        let radius = p.gamma * mean_knn;
        ContactMap::new(points.points().iter().map(|q| core_index.nearest(q).1 <= radius).collect())
    };
    SideStages { votes, cross_distance, candidates, core, mean_knn, map }
}

/// Runs all four stages on both clouds.
pub fn contact_stages(obj: &PointCloud, hand: &PointCloud, p: &ContactParams) -> Result<ContactStages> {
    p.validate()?;
    let obj_index = SpatialIndex::new(obj);
    let hand_index = SpatialIndex::new(hand);
    let (vote_o, hand_d) = votes_from(hand, &obj_index);
    let (vote_h, obj_d) = votes_from(obj, &hand_index);
    Ok(ContactStages {
        object: side_stages(obj, &obj_index, vote_o, obj_d, p),
        hand: side_stages(hand, &hand_index, vote_h, hand_d, p),
    })
}

/// `(C_O, C_H)`; an empty core set yields an all-zero map for that side.
pub fn compute_contact_maps(obj: &PointCloud, hand: &PointCloud, p: &ContactParams) -> Result<(ContactMap, ContactMap)> {
    let stages = contact_stages(obj, hand, p)?;
    Ok((stages.object.map, stages.hand.map))
}

/// Entry `(j, i)` is the distance from joint `j` to object point `i`.
pub fn distance_map(joints: &[Vec3], obj: &PointCloud) -> DistanceMap {
    DistanceMap { rows: joints.iter().map(|j| obj.points().iter().map(|p| (j - p).norm()).collect()).collect() }
}

/// Dataset annotation: contact maps for a posed hand plus its 7-bit label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactAnnotation {
    pub hand_contact: ContactMap,
    pub object_contact: ContactMap,
    pub label7: ContactLabel7,
}

pub fn dataset_contact_annotation(
    hand_vertices: &PointCloud,
    obj: &PointCloud,
    part_labels: &[PartLabel17],
    p: &ContactParams,
) -> Result<ContactAnnotation> {
    let (object_contact, hand_contact) = compute_contact_maps(obj, hand_vertices, p)?;
    let label7 = contact_label7(&hand_contact, part_labels, p.min_hits)?;
    Ok(ContactAnnotation { hand_contact, object_contact, label7 })
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn cloud(points: &[[f64; 3]]) -> PointCloud {
        PointCloud::new(points.iter().map(|&p| Vec3::from(p)).collect()).unwrap()
    }

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize, center: Vec3, spread: f64) -> PointCloud {
        PointCloud::new(
            (0..n)
                .map(|_| center + Vec3::from_fn(|_, _| rng.gen_range(-spread..spread)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_target_gets_all_votes() {
        let obj = cloud(&[[0.0, 0.0, 0.0]]);
        let hand = cloud(&[[1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 3.0, 0.0], [0.0, 0.0, 4.0], [5.0, 5.0, 5.0]]);
        let (vo, vh) = bidirectional_votes(&obj, &hand);
        assert_eq!(vo, vec![5]);
        assert_eq!(vh, vec![1, 0, 0, 0, 0]);
    }

    #[test]
    fn identical_clouds_vote_once_each() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = random_cloud(&mut rng, 50, Vec3::zeros(), 10.0);
        let (vo, vh) = bidirectional_votes(&c, &c);
        assert!(vo.iter().all(|&v| v == 1));
        assert!(vh.iter().all(|&v| v == 1));
    }

    #[test]
    fn votes_are_conserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_cloud(&mut rng, 137, Vec3::zeros(), 20.0);
        let b = random_cloud(&mut rng, 59, Vec3::new(10.0, 0.0, 0.0), 20.0);
        let (vo, vh) = bidirectional_votes(&a, &b);
        assert_eq!(vo.iter().sum::<usize>(), 59);
        assert_eq!(vh.iter().sum::<usize>(), 137);
    }

    #[test]
    fn far_apart_clouds_have_no_contact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_cloud(&mut rng, 200, Vec3::zeros(), 20.0);
        let b = random_cloud(&mut rng, 200, Vec3::new(500.0, 0.0, 0.0), 20.0);
        let (co, ch) = compute_contact_maps(&a, &b, &ContactParams::default()).unwrap();
        assert_eq!(co.count(), 0);
        assert_eq!(ch.count(), 0);
    }

    #[test]
    fn touching_points_among_fillers() {
        // object: a line of points 10 mm apart; hand: two points touching the
        // line, the rest hovering 100 mm above it
        let obj: Vec<[f64; 3]> = (0..10).map(|i| [10.0 * i as f64, 0.0, 0.0]).collect();
        let mut hand: Vec<[f64; 3]> = (0..10).map(|i| [10.0 * i as f64, 100.0, 0.0]).collect();
        hand[4] = [30.0, 0.0, 0.0];
        hand[5] = [40.0, 0.5, 0.0];
        let p = ContactParams { alpha: 0.5, gamma: 0.0, ..Default::default() };
        let stages = contact_stages(&cloud(&obj), &cloud(&hand), &p).unwrap();
        assert_eq!(stages.object.votes, vec![1, 1, 1, 2, 1, 0, 1, 1, 1, 1]);
        assert_eq!(stages.object.core, vec![3, 4]);
        assert_eq!(stages.object.map.indices().collect::<Vec<_>>(), vec![3, 4]);
        assert_eq!(stages.hand.votes, vec![0, 0, 0, 0, 4, 6, 0, 0, 0, 0]);
        assert_eq!(stages.hand.core, vec![4, 5]);
        assert_eq!(stages.hand.map.indices().collect::<Vec<_>>(), vec![4, 5]);
    }

    #[test]
    fn single_candidate_never_passes_strict_threshold() {
        let obj: Vec<[f64; 3]> = (0..10).map(|i| [10.0 * i as f64, 0.0, 0.0]).collect();
        let mut hand: Vec<[f64; 3]> = (0..10).map(|i| [10.0 * i as f64, 100.0, 0.0]).collect();
        hand[4] = [30.0, 0.0, 0.0];
        let stages = contact_stages(&cloud(&obj), &cloud(&hand), &ContactParams::default()).unwrap();
        assert_eq!(stages.object.candidates, vec![3]);
        assert!(stages.object.core.is_empty());
        assert_eq!(stages.object.map.count(), 0);
    }

    #[test]
    fn stage_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let a = random_cloud(&mut rng, 300, Vec3::zeros(), 15.0);
            let b = random_cloud(&mut rng, 200, Vec3::new(20.0, 0.0, 0.0), 15.0);
            let s = contact_stages(&a, &b, &ContactParams::default()).unwrap();
            for side in [&s.object, &s.hand] {
                assert!(side.core.iter().all(|i| side.candidates.contains(i)));
                assert!(side.core.iter().all(|&i| side.map.bits()[i]));
            }
        }
    }

    #[test]
    fn scale_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_cloud(&mut rng, 300, Vec3::zeros(), 15.0);
        let b = random_cloud(&mut rng, 250, Vec3::new(18.0, 0.0, 0.0), 15.0);
        let p = ContactParams::default();
        let base = contact_stages(&a, &b, &p).unwrap();
        // power-of-two scaling keeps every distance comparison exact
        let s = 4.0;
        let (a2, b2) = (a.map(|v| v * s).unwrap(), b.map(|v| v * s).unwrap());
        let scaled = contact_stages(&a2, &b2, &ContactParams { eps: p.eps * s, ..p }).unwrap();
        assert_eq!(base.object.map, scaled.object.map);
        assert_eq!(base.hand.map, scaled.hand.map);
        assert!((scaled.object.mean_knn - s * base.object.mean_knn).abs() < 1e-9);
    }

    #[test]
    fn distance_map_entries() {
        let obj = cloud(&[[0.0, 0.0, 0.0], [0.0, 3.0, 4.0]]);
        let joints = vec![Vec3::zeros(), Vec3::new(10.0, 0.0, 0.0)];
        let dm = distance_map(&joints, &obj);
        assert_eq!(dm.rows[0], vec![0.0, 5.0]);
        assert!((dm.rows[1][1] - (100.0f64 + 25.0).sqrt()).abs() < 1e-12);
        let obj2 = obj.map(|p| p * 2.0).unwrap();
        let j2: Vec<Vec3> = joints.iter().map(|j| j * 2.0).collect();
        let dm2 = distance_map(&j2, &obj2);
        for (r1, r2) in dm.rows.iter().zip(&dm2.rows) {
            for (a, b) in r1.iter().zip(r2) {
                assert!((2.0 * a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn contact_map_json() {
        let m = ContactMap::new(vec![true, false, true]);
        assert_eq!(serde_json::to_string(&m).unwrap(), "[1,0,1]");
    }

    #[test]
    fn invalid_params() {
        let a = cloud(&[[0.0, 0.0, 0.0]]);
        let p = ContactParams { alpha: 1.5, ..Default::default() };
        assert!(compute_contact_maps(&a, &a, &p).is_err());
    }
}
