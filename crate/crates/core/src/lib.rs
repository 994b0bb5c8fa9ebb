//! Turns indoor scene meshes into image-goal navigation benchmarks.
//!
//! The pipeline: load a PLY scene ([`mesh`]), derive the walkable grid for a
//! cylinder agent ([`navmesh`]), sample episodes on its largest island
//! ([`episodes`]), run policies in the discrete-action simulator ([`sim`])
//! with rendered observations ([`render`]), and aggregate outcomes and
//! reconstruction quality ([`metrics`]). Policies plug in in-process or over
//! HTTP ([`protocol`]).

pub mod episodes;
pub mod fixtures;
pub mod geom;
pub mod mesh;
pub mod metrics;
pub mod navmesh;
pub mod protocol;
pub mod render;
pub mod sim;
pub mod spatial;

pub use geom::{Aabb, Vec3};
pub use mesh::{Mesh, PointCloud, UpAxis};
pub use spatial::{Bvh, RayHit};
