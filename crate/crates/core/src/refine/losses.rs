use std::collections::VecDeque;

use super::JointLimits;
use crate::contact::ContactMap;
use crate::error::{Error, Result};
use crate::geom::winding::inside_unchecked;
use crate::geom::{SpatialIndex, TriMesh, Vec3};
use crate::hand::NUM_POSE_BONES;

/// Optional gradient sink: per-vertex gradient buffer and the factor applied
/// to every contribution.
pub(crate) type Sink<'a> = Option<(&'a mut [Vec3], f64)>;

fn push(sink: &mut Sink<'_>, i: usize, g: Vec3) {
    if let Some((buf, w)) = sink {
        buf[i] += g * *w;
    }
}

fn check_len(map: &ContactMap, n: usize, what: &str) -> Result<()> {
    if map.len() != n {
        return Err(Error::DimensionMismatch(format!("{what} has {} entries for {n} points", map.len())));
    }
    Ok(())
}

/// Mean distance (mm) from contact-marked hand vertices to the nearest object
/// point; 0 without contact vertices.
pub fn loss_contact(hand_verts: &[Vec3], hand_contact: &ContactMap, obj_index: &SpatialIndex) -> Result<f64> {
    check_len(hand_contact, hand_verts.len(), "hand contact map")?;
    let idx: Vec<usize> = hand_contact.indices().collect();
    Ok(contact_term(hand_verts, &idx, obj_index, None))
}

pub(crate) fn contact_term(verts: &[Vec3], contact: &[usize], obj_index: &SpatialIndex, mut sink: Sink<'_>) -> f64 {
    if contact.is_empty() {
        return 0.0;
    }
    let n = contact.len() as f64;
    let mut s = 0.0;
    for &i in contact {
        let (j, d) = obj_index.nearest(&verts[i]);
        s += d;
        if d > 0.0 {
            push(&mut sink, i, (verts[i] - obj_index.point(j)) / (d * n));
        }
    }
    s / n
}

/// Summed depth (mm) of hand vertices inside the object.
pub fn loss_penetration(hand_verts: &[Vec3], obj: &TriMesh) -> Result<f64> {
    obj.require_watertight("object mesh must be watertight")?;
    Ok(penetration_term(hand_verts, obj, None))
}

pub(crate) fn penetration_term(verts: &[Vec3], obj: &TriMesh, mut sink: Sink<'_>) -> f64 {
    let mut s = 0.0;
    for (i, v) in verts.iter().enumerate() {
        if inside_unchecked(obj, v) {
            let (c, d) = obj.closest_point(v);
            s += d;
            if d > 0.0 {
                push(&mut sink, i, (v - c) / d);
            }
        }
    }
    s
}

/// Squared hinge on every pose DOF outside its bounds.
pub fn loss_anatomy(pose: &[[f64; 3]; NUM_POSE_BONES], limits: &JointLimits) -> f64 {
    anatomy_term(pose, limits, None)
}

pub(crate) fn anatomy_term(pose: &[[f64; 3]; NUM_POSE_BONES], limits: &JointLimits, mut grad: Option<&mut [f64]>) -> f64 {
    let mut s = 0.0;
    for b in 0..NUM_POSE_BONES {
        for a in 0..3 {
            let t = pose[b][a];
            let over = (t - limits.hi[b][a]).max(0.0);
            let under = (limits.lo[b][a] - t).max(0.0);
            s += over * over + under * under;
            if let Some(g) = grad.as_deref_mut() {
                g[3 * b + a] += 2.0 * over - 2.0 * under;
            }
        }
    }
    s
}

/// Vertices within a few mesh edges of each other, excluded from the
/// self-penetration loss.
#[derive(Debug, Clone)]
pub struct SelfContactGraph {
    near: Vec<Vec<usize>>,
}

impl SelfContactGraph {
    /// Records, per vertex, every vertex at graph distance `<= hops`.
    pub fn new(mesh: &TriMesh, hops: usize) -> Self {
        let adj = mesh.vertex_adjacency();
        let n = adj.len();
        let mut depth = vec![usize::MAX; n];
        let mut near = Vec::with_capacity(n);
        let mut queue = VecDeque::new();
        for s in 0..n {
            let mut seen = vec![s];
            depth[s] = 0;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                if depth[u] == hops {
                    continue;
                }
                for &v in &adj[u] {
                    if depth[v] == usize::MAX {
                        depth[v] = depth[u] + 1;
                        seen.push(v);
                        queue.push_back(v);
                    }
                }
            }
            for &v in &seen {
                depth[v] = usize::MAX;
            }
            seen.sort_unstable();
            near.push(seen);
        }
        Self { near }
    }

    pub fn len(&self) -> usize {
        self.near.len()
    }

    pub fn is_empty(&self) -> bool {
        self.near.is_empty()
    }

    pub fn is_near(&self, i: usize, j: usize) -> bool {
        self.near[i].binary_search(&j).is_ok()
    }
}

/// `Σ (margin − d)²` over vertex pairs closer than `margin` that are more than
/// three edges apart on the template.
pub fn loss_self_penetration(verts: &[Vec3], graph: &SelfContactGraph, margin: f64) -> Result<f64> {
    if graph.len() != verts.len() {
        return Err(Error::DimensionMismatch(format!("{} vertices for a {}-vertex graph", verts.len(), graph.len())));
    }
    if !(margin > 0.0) {
        return Err(Error::Invalid(format!("self-penetration margin must be positive, got {margin}")));
    }
    Ok(self_term(verts, graph, margin, None))
}

pub(crate) fn self_term(verts: &[Vec3], graph: &SelfContactGraph, margin: f64, mut sink: Sink<'_>) -> f64 {
    let index = SpatialIndex::from_points(verts.to_vec());
    let mut s = 0.0;
    for (i, v) in verts.iter().enumerate() {
        for j in index.within_radius(v, margin) {
            if j <= i || graph.is_near(i, j) {
                continue;
            }
            let diff = v - verts[j];
            let d = diff.norm();
            if d >= margin {
                continue;
            }
            s += (margin - d) * (margin - d);
            if d > 0.0 {
                let g = diff * (-2.0 * (margin - d) / d);
                push(&mut sink, i, g);
                push(&mut sink, j, -g);
            }
        }
    }
    s
}

fn l1(v: &Vec3) -> f64 {
    v.x.abs() + v.y.abs() + v.z.abs()
}

fn sign(v: &Vec3) -> Vec3 {
    v.map(|c| if c > 0.0 { 1.0 } else if c < 0.0 { -1.0 } else { 0.0 })
}

/// Mean L1 round-trip error of the nearest-neighbor maps hand→object→hand
/// over the hand contact points plus object→hand→object over the object
/// contact points. Either set may be empty, which zeroes the loss.
pub fn loss_cycle(hand_pc: &[Vec3], obj_pc: &[Vec3]) -> f64 {
    let idx: Vec<usize> = (0..hand_pc.len()).collect();
    cycle_term(hand_pc, &idx, obj_pc, None)
}

pub(crate) fn cycle_term(verts: &[Vec3], hand_idx: &[usize], obj_pts: &[Vec3], mut sink: Sink<'_>) -> f64 {
    if hand_idx.is_empty() || obj_pts.is_empty() {
        return 0.0;
    }
    let hand_pts: Vec<Vec3> = hand_idx.iter().map(|&i| verts[i]).collect();
    let hand_index = SpatialIndex::from_points(hand_pts.clone());
    let obj_index = SpatialIndex::from_points(obj_pts.to_vec());

    let nh = hand_pts.len() as f64;
    let mut forward = 0.0;
    for (a, h) in hand_pts.iter().enumerate() {
        let (o, _) = obj_index.nearest(h);
        let (b, _) = hand_index.nearest(&obj_pts[o]);
        let r = h - hand_pts[b];
        forward += l1(&r);
        if a != b {
            let g = sign(&r) / nh;
            push(&mut sink, hand_idx[a], g);
            push(&mut sink, hand_idx[b], -g);
        }
    }

    let no = obj_pts.len() as f64;
    let mut backward = 0.0;
    for o in obj_pts {
        let (b, _) = hand_index.nearest(o);
        let (o2, _) = obj_index.nearest(&hand_pts[b]);
        backward += l1(&(obj_pts[o2] - o));
    }
    forward / nh + backward / no
}
