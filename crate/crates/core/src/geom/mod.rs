//! Geometry primitives: point clouds, triangle meshes, exact nearest-neighbor
//! search, winding-number inside tests, voxel volumes, 2D affine estimation
//! and binary masks.

pub mod affine;
pub mod cloud;
pub mod io;
pub mod kdtree;
pub mod mask;
pub mod mesh;
pub mod quantile;
pub mod shapes;
pub mod voxel;
pub mod winding;

pub type Vec3 = nalgebra::Vector3<f64>;

pub use affine::{estimate_affine_ransac, rotation_angle_from_affine, Affine2, Point2, RansacParams};
pub use cloud::{dist2, PointCloud};
pub use kdtree::{nearest_neighbor, SpatialIndex};
pub use mask::{mask_iou, warp_mask, BinaryMask};
pub use mesh::{closest_point_on_triangle, TriMesh};
pub use quantile::quantile;
pub use voxel::{voxelize_and_inside_volume, VoxelGrid, DEFAULT_CELL_BUDGET};
pub use winding::{point_inside_mesh, winding_number};
