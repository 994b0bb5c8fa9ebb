//! Acceleration structures: a triangle BVH for ray queries and visibility,
//! and a point k-d tree for nearest-neighbor lookups.

mod bvh;
mod kdtree;

pub use bvh::{intersect_triangle, Bvh, RayHit, SpatialError, BARYCENTRIC_EPS, DEFAULT_LOS_EPS, MIN_HIT_DISTANCE};
pub use kdtree::KdTree;
