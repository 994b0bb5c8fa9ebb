//! Triangle meshes: validation, axis conventions, bounds, surface sampling.
//!
//! Positions are meters in a right-handed frame. Scenes coming out of a
//! reconstruction pipeline are usually Z-up; everything downstream of
//! ingestion (navigation grids, simulation, rendering) works in Y-up.

mod ply;
mod sample;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Aabb, Vec3};

pub use ply::{load_ply, parse_ply, write_ply, write_ply_file, PlyEncoding};
pub use sample::sample_surface;

/// Color used for meshes without per-vertex colors.
pub const DEFAULT_COLOR: [u8; 3] = [128, 128, 128];

/// Tolerance on the unit-length invariant of stored normals.
pub const NORMAL_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("face {face}: vertex index {index} out of range (vertex count {vertex_count})")]
    IndexOutOfRange {
        face: usize,
        index: i64,
        vertex_count: usize,
    },
    #[error("{what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("normal {index} is not unit length (|n| = {length})")]
    NonUnitNormal { index: usize, length: f64 },
    #[error("mesh is empty")]
    Empty,
    #[error("every triangle is degenerate (zero area)")]
    AllDegenerate,
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type MeshResult<T> = Result<T, MeshError>;

/// Which world axis points up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpAxis {
    YUp,
    ZUp,
}

impl fmt::Display for UpAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UpAxis::YUp => "y-up",
            UpAxis::ZUp => "z-up",
        })
    }
}

impl FromStr for UpAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "y-up" | "y_up" | "yup" | "y" => Ok(UpAxis::YUp),
            "z-up" | "z_up" | "zup" | "z" => Ok(UpAxis::ZUp),
            other => Err(format!("unknown up axis `{other}` (expected y-up or z-up)")),
        }
    }
}

/// Indexed triangle surface with optional per-vertex colors and normals.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    colors: Option<Vec<[u8; 3]>>,
    normals: Option<Vec<Vec3>>,
    triangles: Vec<[u32; 3]>,
    up_axis: UpAxis,
}

impl Mesh {
    pub fn new(
        vertices: Vec<Vec3>,
        colors: Option<Vec<[u8; 3]>>,
        normals: Option<Vec<Vec3>>,
        triangles: Vec<[u32; 3]>,
        up_axis: UpAxis,
    ) -> MeshResult<Self> {
        let n = vertices.len();
        if let Some(c) = &colors {
            if c.len() != n {
                return Err(MeshError::LengthMismatch {
                    what: "colors",
                    got: c.len(),
                    expected: n,
                });
            }
        }
        if let Some(ns) = &normals {
            if ns.len() != n {
                return Err(MeshError::LengthMismatch {
                    what: "normals",
                    got: ns.len(),
                    expected: n,
                });
            }
            if let Some((index, nrm)) = ns
                .iter()
                .enumerate()
                .find(|(_, v)| (v.norm() - 1.0).abs() > NORMAL_TOLERANCE)
            {
                return Err(MeshError::NonUnitNormal {
                    index,
                    length: nrm.norm(),
                });
            }
        }
        for (face, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i as usize >= n) {
                return Err(MeshError::IndexOutOfRange {
                    face,
                    index: bad as i64,
                    vertex_count: n,
                });
            }
        }
        Ok(Self {
            vertices,
            colors,
            normals,
            triangles,
            up_axis,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn colors(&self) -> Option<&[[u8; 3]]> {
        self.colors.as_deref()
    }

    pub fn normals(&self) -> Option<&[Vec3]> {
        self.normals.as_deref()
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn up_axis(&self) -> UpAxis {
        self.up_axis
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Color of vertex `i`, falling back to [`DEFAULT_COLOR`].
    pub fn color(&self, i: usize) -> [u8; 3] {
        self.colors.as_ref().map_or(DEFAULT_COLOR, |c| c[i])
    }

    pub fn triangle(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Twice-area-weighted normal (cross product of the edges).
    pub fn triangle_cross(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangle(t);
        (b - a).cross(&(c - a))
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * self.triangle_cross(t).norm()
    }

    /// Unit geometric normal, `None` for degenerate triangles.
    pub fn triangle_normal(&self, t: usize) -> Option<Vec3> {
        let n = self.triangle_cross(t);
        let len = n.norm();
        (len > 0.0 && len.is_finite()).then(|| n / len)
    }

    pub fn is_degenerate(&self, t: usize) -> bool {
        self.triangle_normal(t).is_none()
    }

    /// Concatenates meshes. Colors are kept when any part has them; parts
    /// without colors contribute [`DEFAULT_COLOR`]. Normals are kept only
    /// when every part has them.
    pub fn merge(parts: &[Mesh]) -> MeshResult<Mesh> {
        let up = parts.first().map_or(UpAxis::YUp, |m| m.up_axis);
        let any_colors = parts.iter().any(|m| m.colors.is_some());
        let all_normals = !parts.is_empty() && parts.iter().all(|m| m.normals.is_some());
        let mut vertices = Vec::new();
        let mut colors = Vec::new();
        let mut normals = Vec::new();
        let mut triangles = Vec::new();
        for m in parts {
            let m = m.clone().convert_axis(up);
            let base = vertices.len() as u32;
            vertices.extend_from_slice(&m.vertices);
            if any_colors {
                colors.extend((0..m.vertex_count()).map(|i| m.color(i)));
            }
            if all_normals {
                normals.extend_from_slice(m.normals.as_deref().unwrap_or_default());
            }
            triangles.extend(m.triangles.iter().map(|t| t.map(|i| i + base)));
        }
        Mesh::new(
            vertices,
            any_colors.then_some(colors),
            all_normals.then_some(normals),
            triangles,
            up,
        )
    }

    /// Rotates the mesh into the target up-axis convention.
    ///
    /// Z-up to Y-up maps `(x, y, z)` to `(x, z, -y)`; the reverse direction
    /// is the inverse rotation. Normals are rotated with positions.
    pub fn convert_axis(self, target: UpAxis) -> Mesh {
        let map: fn(&Vec3) -> Vec3 = match (self.up_axis, target) {
            (a, b) if a == b => return self,
            (UpAxis::ZUp, UpAxis::YUp) => |v| Vec3::new(v.x, v.z, -v.y),
            _ => |v| Vec3::new(v.x, -v.z, v.y),
        };
        Mesh {
            vertices: self.vertices.iter().map(map).collect(),
            normals: self.normals.map(|ns| ns.iter().map(map).collect()),
            colors: self.colors,
            triangles: self.triangles,
            up_axis: target,
        }
    }

    /// Tight bounds over all vertices.
    pub fn compute_bounds(&self) -> MeshResult<Aabb> {
        if self.vertices.is_empty() {
            return Err(MeshError::Empty);
        }
        let mut b = Aabb::empty();
        for v in &self.vertices {
            b.grow(*v);
        }
        Ok(b)
    }
}

/// Points with optional unit normals.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vec3>,
    normals: Option<Vec<Vec3>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>, normals: Option<Vec<Vec3>>) -> MeshResult<Self> {
        if let Some(ns) = &normals {
            if ns.len() != points.len() {
                return Err(MeshError::LengthMismatch {
                    what: "normals",
                    got: ns.len(),
                    expected: points.len(),
                });
            }
            if let Some((index, n)) = ns
                .iter()
                .enumerate()
                .find(|(_, n)| (n.norm() - 1.0).abs() > NORMAL_TOLERANCE)
            {
                return Err(MeshError::NonUnitNormal {
                    index,
                    length: n.norm(),
                });
            }
        }
        Ok(Self { points, normals })
    }

    /// Uses the mesh vertices (and their normals, if any) as a cloud.
    pub fn from_vertices(mesh: &Mesh) -> Self {
        Self {
            points: mesh.vertices.clone(),
            normals: mesh.normals.clone(),
        }
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn normals(&self) -> Option<&[Vec3]> {
        self.normals.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn without_normals(mut self) -> Self {
        self.normals = None;
        self
    }
}
