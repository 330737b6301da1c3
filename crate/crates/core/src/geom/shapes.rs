//! Closed analytic meshes used for fixtures and synthetic scenes.

use std::collections::HashMap;

use super::mesh::TriMesh;
use super::Vec3;

/// Axis-aligned box from `lo` to `hi` with `n` subdivisions per edge.
pub fn cuboid(lo: Vec3, hi: Vec3, n: usize) -> TriMesh {
    cuboid_grid(lo, hi, [n, n, n])
}

/// Axis-aligned box with per-axis subdivision counts (each ≥ 1).
pub fn cuboid_grid(lo: Vec3, hi: Vec3, n: [usize; 3]) -> TriMesh {
    let n = n.map(|c| c.max(1));
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut vid = |ijk: [usize; 3], vertices: &mut Vec<Vec3>| -> usize {
        *index.entry(ijk).or_insert_with(|| {
            let p = Vec3::from_fn(|a, _| lo[a] + (hi[a] - lo[a]) * ijk[a] as f64 / n[a] as f64);
            vertices.push(p);
            vertices.len() - 1
        })
    };
    let mut faces = Vec::new();
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0, n[axis]] {
            let outward = if side == 0 { -1.0 } else { 1.0 };
            for i in 0..n[u] {
                for j in 0..n[v] {
                    let mut corner = |di: usize, dj: usize, vertices: &mut Vec<Vec3>| {
                        let mut ijk = [0; 3];
                        ijk[axis] = side;
                        ijk[u] = i + di;
                        ijk[v] = j + dj;
                        vid(ijk, vertices)
                    };
                    let q = [
                        corner(0, 0, &mut vertices),
                        corner(1, 0, &mut vertices),
                        corner(1, 1, &mut vertices),
                        corner(0, 1, &mut vertices),
                    ];
                    // (u, v, axis) is right-handed, so this winding faces +axis
                    if outward > 0.0 {
                        faces.push([q[0], q[1], q[2]]);
                        faces.push([q[0], q[2], q[3]]);
                    } else {
                        faces.push([q[0], q[2], q[1]]);
                        faces.push([q[0], q[3], q[2]]);
                    }
                }
            }
        }
    }
    TriMesh::new(vertices, faces).expect("cuboid construction is valid")
}

/// Icosphere with `subdivisions` rounds of midpoint refinement.
pub fn icosphere(center: Vec3, radius: f64, subdivisions: usize) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| Vec3::from(*p).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3>| {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    for f in &mut faces {
        let [a, b, c] = f.map(|i| verts[i]);
        if (b - a).cross(&(c - a)).dot(&(a + b + c)) < 0.0 {
            f.swap(1, 2);
        }
    }
    let vertices = verts.into_iter().map(|p| center + p * radius).collect();
    TriMesh::new(vertices, faces).expect("icosphere construction is valid")
}
