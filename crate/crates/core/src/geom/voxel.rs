use serde::{Deserialize, Serialize};

use super::mesh::TriMesh;
use super::winding::inside_unchecked;
use super::Vec3;
use crate::error::{Error, Result};

/// Default cap on the number of cells a voxel grid may span.
pub const DEFAULT_CELL_BUDGET: u64 = 50_000_000;

/// Dense occupancy grid. Cell `(i, j, k)` has its center at
/// `origin + (i + 0.5, j + 0.5, k + 0.5) * voxel_size`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelGrid {
    pub origin: [f64; 3],
    pub voxel_size: f64,
    pub dims: [usize; 3],
    pub occupancy: Vec<bool>,
}

impl VoxelGrid {
    fn layout(mesh: &TriMesh, voxel_size: f64, budget: u64) -> Result<([f64; 3], [usize; 3])> {
        if !(voxel_size > 0.0) || !voxel_size.is_finite() {
            return Err(Error::Invalid(format!("voxel size must be positive, got {voxel_size}")));
        }
        let (lo, hi) = mesh.bounds();
        let dims = [0, 1, 2].map(|a| (((hi[a] - lo[a]) / voxel_size).ceil() as usize).max(1));
        let cells = dims.iter().map(|&d| d as u64).product::<u64>();
        if cells > budget {
            return Err(Error::GridTooLarge { cells, budget });
        }
        Ok(([lo.x, lo.y, lo.z], dims))
    }

    /// Marks every cell whose center lies inside the watertight `mesh`.
    pub fn from_mesh(mesh: &TriMesh, voxel_size: f64, budget: u64) -> Result<Self> {
        mesh.require_watertight("voxelization requires a watertight mesh")?;
        let (origin, dims) = Self::layout(mesh, voxel_size, budget)?;
        let mut grid = Self { origin, voxel_size, dims, occupancy: vec![false; dims.iter().product()] };
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let c = grid.center(i, j, k);
                    let idx = grid.linear(i, j, k);
                    grid.occupancy[idx] = inside_unchecked(mesh, &c);
                }
            }
        }
        Ok(grid)
    }

    pub fn center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(
            self.origin[0] + (i as f64 + 0.5) * self.voxel_size,
            self.origin[1] + (j as f64 + 0.5) * self.voxel_size,
            self.origin[2] + (k as f64 + 0.5) * self.voxel_size,
        )
    }

    pub fn linear(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&b| b).count()
    }
}

/// Volume (cm³) of the container's voxelization that lies inside the probe.
///
/// The container is voxelized on a grid anchored at its bounding-box minimum;
/// a cell counts when its center is inside both meshes by winding number.
/// Only cells whose centers fall in the probe's bounding box are evaluated.
pub fn voxelize_and_inside_volume(
    container: &TriMesh,
    probe: &TriMesh,
    voxel_size: f64,
    budget: u64,
) -> Result<f64> {
    container.require_watertight("container mesh must be watertight")?;
    probe.require_watertight("probe mesh must be watertight")?;
    let (origin, dims) = VoxelGrid::layout(container, voxel_size, budget)?;
    let (plo, phi) = probe.bounds();
    // cell i has center origin + (i + 0.5) h; keep the centers inside [plo, phi]
    let range = |a: usize| -> (usize, usize) {
        let first = ((plo[a] - origin[a]) / voxel_size - 0.5).ceil().max(0.0) as usize;
        let last = ((phi[a] - origin[a]) / voxel_size - 0.5).floor();
        if last < 0.0 {
            return (0, 0);
        }
        (first, (last as usize + 1).min(dims[a]))
    };
    let (rx, ry, rz) = (range(0), range(1), range(2));
    let mut count = 0u64;
    for k in rz.0..rz.1 {
        for j in ry.0..ry.1 {
            for i in rx.0..rx.1 {
                let c = Vec3::new(
                    origin[0] + (i as f64 + 0.5) * voxel_size,
                    origin[1] + (j as f64 + 0.5) * voxel_size,
                    origin[2] + (k as f64 + 0.5) * voxel_size,
                );
                if inside_unchecked(container, &c) && inside_unchecked(probe, &c) {
                    count += 1;
                }
            }
        }
    }
    Ok(count as f64 * voxel_size.powi(3) / 1000.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::shapes::{cuboid, icosphere};

    fn cube(at: Vec3, edge: f64) -> TriMesh {
        cuboid(at, at + Vec3::repeat(edge), 2)
    }

    #[test]
    fn disjoint_cubes_have_no_volume() {
        let a = cube(Vec3::zeros(), 1.0);
        let b = cube(Vec3::new(100.0, 0.0, 0.0), 1.0);
        assert_eq!(voxelize_and_inside_volume(&a, &b, 0.1, DEFAULT_CELL_BUDGET).unwrap(), 0.0);
    }

    #[test]
    fn identical_cubes() {
        let a = cube(Vec3::zeros(), 10.0);
        let v = voxelize_and_inside_volume(&a, &a, 0.5, DEFAULT_CELL_BUDGET).unwrap();
        assert!((v - 1.0).abs() <= 0.05);
    }

    #[test]
    fn half_overlap() {
        let a = cube(Vec3::zeros(), 10.0);
        let b = cube(Vec3::new(5.0, 0.0, 0.0), 10.0);
        let v = voxelize_and_inside_volume(&a, &b, 0.5, DEFAULT_CELL_BUDGET).unwrap();
        assert!((v - 0.5).abs() <= 0.025);
    }

    #[test]
    fn errors() {
        let a = cube(Vec3::zeros(), 10.0);
        assert!(matches!(
            voxelize_and_inside_volume(&a, &a, 0.001, 1000),
            Err(Error::GridTooLarge { .. })
        ));
        let open = TriMesh::new(a.vertices().to_vec(), a.faces()[1..].to_vec()).unwrap();
        assert!(matches!(voxelize_and_inside_volume(&open, &a, 1.0, 1000), Err(Error::OpenSurface(_))));
        assert!(matches!(voxelize_and_inside_volume(&a, &open, 1.0, 1000), Err(Error::OpenSurface(_))));
    }

    #[test]
    fn full_grid_counts_sphere_cells() {
        let s = icosphere(Vec3::zeros(), 10.0, 3);
        let g = VoxelGrid::from_mesh(&s, 1.0, DEFAULT_CELL_BUDGET).unwrap();
        assert_eq!(g.occupancy.len(), g.dims.iter().product::<usize>());
        let vol = g.occupied_count() as f64;
        let exact = 4.0 / 3.0 * std::f64::consts::PI * 1000.0;
        assert!((vol - exact).abs() / exact < 0.05, "{vol}");
    }
}
