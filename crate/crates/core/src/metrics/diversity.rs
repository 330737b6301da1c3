use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hand::PosedHand;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid, lowest index on ties.
fn nearest(x: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, m) in centroids.iter().enumerate() {
        let d = sq_dist(x, m);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(x: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![x[rng.gen_range(0..x.len())].clone()];
    let mut d2: Vec<f64> = x.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let r = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = x.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if r < acc {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.gen_range(0..x.len())
        };
        centroids.push(x[pick].clone());
        for (i, p) in x.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &centroids[centroids.len() - 1]));
        }
    }
    centroids
}

/// Lloyd's algorithm from a seeded k-means++ start. A cluster that loses all
/// members is re-seeded at the point farthest from its current centroid.
pub fn kmeans(x: &[Vec<f64>], k: usize, seed: u64, max_iter: usize) -> Result<KMeans> {
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    if x.len() < k {
        return Err(Error::Invalid(format!("{} samples cannot form {k} clusters", x.len())));
    }
    let dim = x[0].len();
    if x.iter().any(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch("feature rows differ in length".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(x, k, &mut rng);
    let mut assignments: Vec<usize> = x.iter().map(|p| nearest(p, &centroids).0).collect();
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in x.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let mut far = (0, -1.0);
                for (i, p) in x.iter().enumerate() {
                    let d = sq_dist(p, &centroids[assignments[i]]);
                    if d > far.1 {
                        far = (i, d);
                    }
                }
                centroids[c] = x[far.0].clone();
                assignments[far.0] = c;
            }
        }
        let next: Vec<usize> = x.iter().map(|p| nearest(p, &centroids).0).collect();
        if next == assignments {
            break;
        }
        assignments = next;
    }
    Ok(KMeans { assignments, centroids, iterations })
}

/// Shannon entropy (nats) of the cluster-assignment frequencies.
pub fn assignment_entropy(assignments: &[usize], k: usize) -> f64 {
    let mut counts = vec![0usize; k];
    for &a in assignments {
        counts[a] += 1;
    }
    let n = assignments.len() as f64;
    let mut h = 0.0;
    for c in counts {
        if c > 0 {
            let p = c as f64 / n;
            h -= p * p.ln();
        }
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diversity {
    pub entropy: f64,
    /// Mean distance of a sample to its assigned centroid, cm.
    pub cluster_size: f64,
    pub k: usize,
    pub samples: usize,
    pub cluster_size_definition: String,
    pub feature: String,
}

/// Posed vertices relative to the wrist joint, flattened.
pub fn diversity_features(hand: &PosedHand) -> Vec<f64> {
    let wrist = hand.joints[0];
    hand.vertices.iter().flat_map(|v| {
        let d = v - wrist;
        [d.x, d.y, d.z]
    }).collect()
}

/// Entropy and cluster size of k-means clusters over per-sample features
/// given in mm.
pub fn diversity(features: &[Vec<f64>], k: usize, seed: u64, max_iter: usize) -> Result<Diversity> {
    let km = kmeans(features, k, seed, max_iter)?;
    let mut spread = 0.0;
    for (x, &a) in features.iter().zip(&km.assignments) {
        spread += sq_dist(x, &km.centroids[a]).sqrt();
    }
    Ok(Diversity {
        entropy: assignment_entropy(&km.assignments, k),
        cluster_size: spread / features.len() as f64 / 10.0,
        k,
        samples: features.len(),
        cluster_size_definition: "mean distance to assigned centroid (cm)".into(),
        feature: "wrist-relative posed vertices".into(),
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::Rng;

    use super::*;

    fn blobs() -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut x = Vec::new();
        for i in 0..40 {
            let c = if i % 2 == 0 { 0.0 } else { 100.0 };
            x.push(vec![c + rng.gen_range(-1.0..1.0), c + rng.gen_range(-1.0..1.0)]);
        }
        x
    }

    #[test]
    fn separable_blobs() {
        let x = blobs();
        let km = kmeans(&x, 2, 3, 100).unwrap();
        for i in 0..x.len() {
            assert_eq!(km.assignments[i] == km.assignments[0], i % 2 == 0);
        }
    }

    #[test]
    fn identical_points() {
        let x = vec![vec![1.0, 2.0, 3.0]; 10];
        let km = kmeans(&x, 2, 0, 100).unwrap();
        for (p, &a) in x.iter().zip(&km.assignments) {
            assert_eq!(sq_dist(p, &km.centroids[a]), 0.0);
        }
    }

    #[test]
    fn deterministic_and_errors() {
        let x = blobs();
        assert_eq!(kmeans(&x, 5, 42, 100).unwrap(), kmeans(&x, 5, 42, 100).unwrap());
        assert!(kmeans(&x[..3], 5, 0, 100).is_err());
    }

    #[test]
    fn entropy_anchors() {
        let uniform: Vec<usize> = (0..200).map(|i| i % 20).collect();
        assert!((assignment_entropy(&uniform, 20) - 20f64.ln()).abs() < 1e-9);
        assert_eq!(assignment_entropy(&[3; 17], 20), 0.0);
        let mut doubled = uniform.clone();
        doubled.extend(&uniform);
        assert!((assignment_entropy(&doubled, 20) - assignment_entropy(&uniform, 20)).abs() < 1e-12);
    }

    #[test]
    fn diversity_of_one_blob() {
        let x = vec![vec![5.0, 5.0]; 20];
        let d = diversity(&x, 1, 0, 10).unwrap();
        assert_eq!(d.entropy, 0.0);
        assert_eq!(d.cluster_size, 0.0);
    }

    proptest! {
        #[test]
        fn entropy_bounded(assign in prop::collection::vec(0usize..20, 1..300)) {
            let h = assignment_entropy(&assign, 20);
            prop_assert!(h >= 0.0);
            prop_assert!(h <= 20f64.ln() + 1e-12);
        }

        #[test]
        fn entropy_permutation_invariant(mut assign in prop::collection::vec(0usize..20, 1..100), seed in 0u64..1000) {
            let h = assignment_entropy(&assign, 20);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..assign.len()).rev() {
                assign.swap(i, rng.gen_range(0..=i));
            }
            prop_assert!((assignment_entropy(&assign, 20) - h).abs() < 1e-12);
        }
    }
}
