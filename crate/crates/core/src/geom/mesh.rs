use std::collections::HashMap;

use rand::Rng;

use super::cloud::PointCloud;
use super::Vec3;
use crate::error::{Error, Result};

/// Triangle mesh in millimeters.
///
/// Faces are counter-clockwise when seen from outside. `watertight` is
/// computed at construction: every directed edge must occur exactly once and
/// be matched by its reverse in exactly one other face.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    watertight: bool,
    bounds: (Vec3, Vec3),
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if let Some(i) = vertices.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::Invalid(format!("mesh vertex {i} is not finite")));
        }
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Invalid(format!("face {fi} references a missing vertex")));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Invalid(format!("face {fi} is degenerate")));
            }
        }
        let watertight = is_closed_manifold(&faces);
        let bounds = bounds_of(&vertices);
        Ok(Self { vertices, faces, watertight, bounds })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn is_watertight(&self) -> bool {
        self.watertight
    }

    pub fn require_watertight(&self, what: &str) -> Result<()> {
        if self.watertight {
            Ok(())
        } else {
            Err(Error::OpenSurface(what.to_string()))
        }
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounds(&self) -> (Vec3, Vec3) {
        self.bounds
    }

    /// Same topology, new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} vertices, got {}",
                self.vertices.len(),
                vertices.len()
            )));
        }
        let bounds = bounds_of(&vertices);
        Ok(Self { vertices, faces: self.faces.clone(), watertight: self.watertight, bounds })
    }

    pub fn transformed(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        let vertices: Vec<Vec3> = self.vertices.iter().map(f).collect();
        let bounds = bounds_of(&vertices);
        Self { vertices, faces: self.faces.clone(), watertight: self.watertight, bounds }
    }

    /// Enclosed volume by the divergence theorem (mm³); positive for outward faces.
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|&[a, b, c]| self.vertices[a].dot(&self.vertices[b].cross(&self.vertices[c])) / 6.0)
            .sum()
    }

    /// Unsigned distance from `p` to the nearest point of any triangle.
    pub fn distance_to_surface(&self, p: &Vec3) -> f64 {
        self.closest_point(p).1
    }

    /// Closest surface point and its distance.
    pub fn closest_point(&self, p: &Vec3) -> (Vec3, f64) {
        let mut best = (Vec3::zeros(), f64::INFINITY);
        for f in 0..self.faces.len() {
            let [a, b, c] = self.triangle(f);
            let q = closest_point_on_triangle(p, &a, &b, &c);
            let d = (p - q).norm();
            if d < best.1 {
                best = (q, d);
            }
        }
        best
    }

    /// Merges several meshes into one vertex/face list.
    pub fn concat(parts: &[TriMesh]) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for part in parts {
            let base = vertices.len();
            vertices.extend_from_slice(&part.vertices);
            faces.extend(part.faces.iter().map(|f| [f[0] + base, f[1] + base, f[2] + base]));
        }
        Self::new(vertices, faces)
    }

    /// Area-weighted uniform surface samples, deterministic for a given RNG.
    pub fn sample_surface<R: Rng>(&self, n: usize, rng: &mut R) -> Result<PointCloud> {
        if self.faces.is_empty() || n == 0 {
            return Err(Error::Invalid("cannot sample an empty surface".into()));
        }
        let mut cumulative = Vec::with_capacity(self.faces.len());
        let mut total = 0.0;
        for f in 0..self.faces.len() {
            let [a, b, c] = self.triangle(f);
            total += 0.5 * (b - a).cross(&(c - a)).norm();
            cumulative.push(total);
        }
        let points = (0..n)
            .map(|_| {
                let r = rng.gen::<f64>() * total;
                let f = cumulative.partition_point(|&c| c < r).min(self.faces.len() - 1);
                let [a, b, c] = self.triangle(f);
                let (mut u, mut v) = (rng.gen::<f64>(), rng.gen::<f64>());
                if u + v > 1.0 {
                    u = 1.0 - u;
                    v = 1.0 - v;
                }
                a + (b - a) * u + (c - a) * v
            })
            .collect();
        PointCloud::new(points)
    }

    /// Vertex adjacency lists (sorted, deduplicated).
    pub fn vertex_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &[a, b, c] in &self.faces {
            for (u, v) in [(a, b), (b, c), (c, a)] {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }
}

pub(crate) fn bounds_of(points: &[Vec3]) -> (Vec3, Vec3) {
    points.iter().fold(
        (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY)),
        |(lo, hi), p| (lo.inf(p), hi.sup(p)),
    )
}

fn is_closed_manifold(faces: &[[usize; 3]]) -> bool {
    if faces.is_empty() {
        return false;
    }
    let mut directed: HashMap<(usize, usize), u32> = HashMap::with_capacity(faces.len() * 3);
    for &[a, b, c] in faces {
        for e in [(a, b), (b, c), (c, a)] {
            *directed.entry(e).or_insert(0) += 1;
        }
    }
    directed.iter().all(|(&(a, b), &n)| n == 1 && directed.get(&(b, a)) == Some(&1))
}

/// Closest point on triangle `abc` to `p` (Voronoi-region walk).
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::shapes;

    #[test]
    fn cube_is_watertight_with_positive_volume() {
        let cube = shapes::cuboid(Vec3::zeros(), Vec3::repeat(10.0), 1);
        assert!(cube.is_watertight());
        assert!((cube.signed_volume() - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn open_surface_detected() {
        let cube = shapes::cuboid(Vec3::zeros(), Vec3::repeat(10.0), 1);
        let mut faces = cube.faces().to_vec();
        faces.pop();
        let open = TriMesh::new(cube.vertices().to_vec(), faces).unwrap();
        assert!(!open.is_watertight());
        assert!(matches!(open.require_watertight("x"), Err(Error::OpenSurface(_))));
    }

    #[test]
    fn rejects_bad_faces() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y()];
        assert!(TriMesh::new(v.clone(), vec![[0, 1, 3]]).is_err());
        assert!(TriMesh::new(v, vec![[0, 1, 1]]).is_err());
    }

    #[test]
    fn closest_point_regions() {
        let (a, b, c) = (Vec3::zeros(), Vec3::new(10.0, 0.0, 0.0), Vec3::new(0.0, 10.0, 0.0));
        assert_eq!(closest_point_on_triangle(&Vec3::new(2.0, 2.0, 5.0), &a, &b, &c), Vec3::new(2.0, 2.0, 0.0));
        assert_eq!(closest_point_on_triangle(&Vec3::new(-3.0, -3.0, 0.0), &a, &b, &c), a);
        assert_eq!(closest_point_on_triangle(&Vec3::new(5.0, -4.0, 0.0), &a, &b, &c), Vec3::new(5.0, 0.0, 0.0));
        let q = closest_point_on_triangle(&Vec3::new(10.0, 10.0, 0.0), &a, &b, &c);
        assert!((q - Vec3::new(5.0, 5.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn surface_distance_inside_cube() {
        let cube = shapes::cuboid(Vec3::repeat(-10.0), Vec3::repeat(10.0), 2);
        assert!((cube.distance_to_surface(&Vec3::zeros()) - 10.0).abs() < 1e-12);
        assert!((cube.distance_to_surface(&Vec3::new(7.0, 0.0, 0.0)) - 3.0).abs() < 1e-12);
    }
}
