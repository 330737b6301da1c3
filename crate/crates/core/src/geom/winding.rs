//! Inside/outside classification by generalized winding number.

use std::f64::consts::PI;

use super::mesh::TriMesh;
use super::Vec3;
use crate::error::Result;

/// Generalized winding number of `mesh` around `p`: the summed signed solid
/// angle of all triangles over 4π. Close to 1 inside a closed outward-facing
/// shell and close to 0 outside.
pub fn winding_number(mesh: &TriMesh, p: &Vec3) -> f64 {
    let verts = mesh.vertices();
    let mut total = 0.0;
    for &[ia, ib, ic] in mesh.faces() {
        let a = verts[ia] - p;
        let b = verts[ib] - p;
        let c = verts[ic] - p;
        let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
        let det = a.dot(&b.cross(&c));
        let denom = la * lb * lc + a.dot(&b) * lc + b.dot(&c) * la + c.dot(&a) * lb;
        total += 2.0 * det.atan2(denom);
    }
    total / (4.0 * PI)
}

/// Winding-number inside test without the watertightness check. Points outside
/// the bounding box are reported outside without summing.
pub(crate) fn inside_unchecked(mesh: &TriMesh, p: &Vec3) -> bool {
    let (lo, hi) = mesh.bounds();
    if (0..3).any(|a| p[a] < lo[a] || p[a] > hi[a]) {
        return false;
    }
    winding_number(mesh, p) > 0.5
}

/// True iff the generalized winding number of the (watertight) mesh at `p`
/// exceeds 0.5.
pub fn point_inside_mesh(mesh: &TriMesh, p: &Vec3) -> Result<bool> {
    mesh.require_watertight("point_inside_mesh requires a watertight mesh")?;
    Ok(inside_unchecked(mesh, p))
}
