//! Exact nearest-neighbor search over a point cloud.
//!
//! Every query returns the same answer as an exhaustive scan, including the
//! tie rule: among equidistant points the lowest index wins. Distances are
//! compared as `(squared distance, index)` pairs, and subtrees are pruned only
//! when the splitting plane is strictly farther than the current best.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::cloud::{dist2, PointCloud};
use super::Vec3;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

/// Read-only kd-tree over a point cloud.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<Vec3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    d2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2.total_cmp(&other.d2).then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl SpatialIndex {
    pub fn new(cloud: &PointCloud) -> Self {
        Self::from_points(cloud.points().to_vec())
    }

    /// Builds over raw points. Panics if `points` is empty.
    pub fn from_points(points: Vec<Vec3>) -> Self {
        assert!(!points.is_empty(), "spatial index needs at least one point");
        let mut index = Self { order: (0..points.len()).collect(), points, nodes: Vec::new() };
        let n = index.points.len();
        index.build(0, n);
        index
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &Vec3 {
        &self.points[i]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let (lo, hi) = self.order[start..end].iter().fold(
            (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY)),
            |(lo, hi), &i| (lo.inf(&self.points[i]), hi.sup(&self.points[i])),
        );
        let axis = (hi - lo).imax();
        if hi[axis] <= lo[axis] {
            // all points coincide
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis])
        });
        let value = self.points[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    /// Nearest point to `query` as `(index, distance)`; ties go to the lowest index.
    pub fn nearest(&self, query: &Vec3) -> (usize, f64) {
        let mut best = Candidate { d2: f64::INFINITY, index: usize::MAX };
        self.nearest_rec(0, query, &mut best);
        (best.index, best.d2.sqrt())
    }

    fn nearest_rec(&self, node: usize, q: &Vec3, best: &mut Candidate) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let c = Candidate { d2: dist2(q, &self.points[i]), index: i };
                    if c < *best {
                        *best = c;
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.nearest_rec(near, q, best);
                if diff * diff <= best.d2 {
                    self.nearest_rec(far, q, best);
                }
            }
        }
    }

    /// The `k` nearest points in ascending `(distance, index)` order, skipping
    /// `exclude` when given.
    pub fn k_nearest(&self, query: &Vec3, k: usize, exclude: Option<usize>) -> Vec<(usize, f64)> {
        if k == 0 {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.knn_rec(0, query, k, exclude, &mut heap);
        heap.into_sorted_vec().into_iter().map(|c| (c.index, c.d2.sqrt())).collect()
    }

    fn knn_rec(
        &self,
        node: usize,
        q: &Vec3,
        k: usize,
        exclude: Option<usize>,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if Some(i) == exclude {
                        continue;
                    }
                    let c = Candidate { d2: dist2(q, &self.points[i]), index: i };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.knn_rec(near, q, k, exclude, heap);
                if heap.len() < k || diff * diff <= heap.peek().unwrap().d2 {
                    self.knn_rec(far, q, k, exclude, heap);
                }
            }
        }
    }

    /// Indices of all points within `radius` (inclusive) of `query`, ascending.
    pub fn within_radius(&self, query: &Vec3, radius: f64) -> Vec<usize> {
        let r2 = radius * radius;
        let mut out = Vec::new();
        self.radius_rec(0, query, r2, &mut out);
        out.sort_unstable();
        out
    }

    fn radius_rec(&self, node: usize, q: &Vec3, r2: f64, out: &mut Vec<usize>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                out.extend(
                    self.order[start..end].iter().copied().filter(|&i| dist2(q, &self.points[i]) <= r2),
                );
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.radius_rec(near, q, r2, out);
                if diff * diff <= r2 {
                    self.radius_rec(far, q, r2, out);
                }
            }
        }
    }
}

/// Convenience wrapper around [`SpatialIndex::nearest`].
pub fn nearest_neighbor(index: &SpatialIndex, query: &Vec3) -> (usize, f64) {
    index.nearest(query)
}
