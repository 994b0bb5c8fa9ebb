use log::debug;

use super::{Embodiment, NavError, NavGrid, NavResult};
use crate::geom::Vec3;
use crate::mesh::{Mesh, UpAxis};
use crate::spatial::Bvh;

pub const DEFAULT_CELL_SIZE: f64 = 0.05;
pub const MIN_CELL_SIZE: f64 = 0.01;
pub const MAX_CELL_SIZE: f64 = 0.5;

/// Steepest floor slope still considered walkable.
pub const WALKABLE_SLOPE_DEG: f64 = 45.0;

/// Geometry less than this far above a cell's floor does not obstruct it.
pub const WALKABLE_CLIMB: f64 = 0.1;

/// Rasterizes the walkable area of a Y-up scene.
///
/// A cell is walkable when the vertical line through its center meets a
/// surface sloped at most [`WALKABLE_SLOPE_DEG`] (the lowest such surface
/// is the floor), no geometry over the cell's footprint lies between
/// `floor + WALKABLE_CLIMB` and `floor + height`, and no such obstructed
/// cell lies closer than the agent radius (distance between cell centers
/// minus half a cell). Cell size and origin are rounded to `f32` so the
/// grid survives the binary cache unchanged.
pub fn build_navgrid(mesh: &Mesh, embodiment: &Embodiment, cell_size: f64) -> NavResult<NavGrid> {
    if mesh.up_axis() != UpAxis::YUp {
        return Err(NavError::NotYUp);
    }
    if !(MIN_CELL_SIZE..=MAX_CELL_SIZE).contains(&cell_size) {
        return Err(NavError::InvalidCellSize(cell_size));
    }
    embodiment.validate().map_err(NavError::InvalidEmbodiment)?;
    if mesh.triangle_count() == 0 {
        return Err(NavError::NoNavigableSurface);
    }
    let cs = cell_size as f32 as f64;
    let bounds = mesh.compute_bounds().map_err(|_| NavError::NoNavigableSurface)?;
    let origin = bounds.min.map(|c| c as f32 as f64);
    let nx = (((bounds.max.x - origin.x) / cs).ceil() as usize).max(1);
    let nz = (((bounds.max.z - origin.z) / cs).ceil() as usize).max(1);
    let n = nx * nz;
    debug!("navgrid {nx}x{nz} cells of {cs} m");

    let bvh = Bvh::build(mesh);
    let normals: Vec<Option<Vec3>> = (0..mesh.triangle_count()).map(|t| mesh.triangle_normal(t)).collect();
    let min_up = WALKABLE_SLOPE_DEG.to_radians().cos();
    let top = bounds.max.y + 1.0;
    let down = -Vec3::y();

    // Floor: lowest walkable-slope surface under each cell center.
    let mut floor = vec![f64::NAN; n];
    for z in 0..nz {
        for x in 0..nx {
            let o = Vec3::new(origin.x + (x as f64 + 0.5) * cs, top, origin.z + (z as f64 + 0.5) * cs);
            let hits = bvh.hits_in_range(&o, &down, 0.0, f64::INFINITY);
            if let Some(h) = hits
                .iter()
                .rev()
                .find(|h| normals[h.triangle].is_some_and(|nrm| nrm.y.abs() >= min_up))
            {
                floor[z * nx + x] = h.point.y;
            }
        }
    }

    // Obstruction: any geometry in the body band over the cell footprint.
    let mut blocked = vec![false; n];
    for (t, normal) in normals.iter().enumerate() {
        if normal.is_none() {
            continue;
        }
        let tri = mesh.triangle(t);
        let (ymin, ymax) = tri.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v.y), hi.max(v.y)));
        let (xmin, xmax) = tri.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v.x), hi.max(v.x)));
        let (zmin, zmax) = tri.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v.z), hi.max(v.z)));
        let x0 = (((xmin - origin.x) / cs).floor().max(0.0) as usize).min(nx - 1);
        let x1 = (((xmax - origin.x) / cs).floor().max(0.0) as usize).min(nx - 1);
        let z0 = (((zmin - origin.z) / cs).floor().max(0.0) as usize).min(nz - 1);
        let z1 = (((zmax - origin.z) / cs).floor().max(0.0) as usize).min(nz - 1);
        for z in z0..=z1 {
            for x in x0..=x1 {
                let i = z * nx + x;
                let f = floor[i];
                if f.is_nan() || blocked[i] {
                    continue;
                }
                let band = (f + WALKABLE_CLIMB, f + embodiment.height);
                if ymax <= band.0 || ymin >= band.1 {
                    continue;
                }
                let cx0 = origin.x + x as f64 * cs;
                let cz0 = origin.z + z as f64 * cs;
                if let Some((lo, hi)) = clipped_height_range(&tri, cx0, cx0 + cs, cz0, cz0 + cs) {
                    if hi > band.0 && lo < band.1 {
                        blocked[i] = true;
                    }
                }
            }
        }
    }

    let open: Vec<bool> = (0..n).map(|i| !floor[i].is_nan() && !blocked[i]).collect();

    // Erosion: drop cells within radius of a non-walkable or off-grid cell.
    let reach = embodiment.radius + cs * 0.5;
    let r = (reach / cs).ceil() as i64;
    let offsets: Vec<(i64, i64)> = (-r..=r)
        .flat_map(|dz| (-r..=r).map(move |dx| (dx, dz)))
        .filter(|&(dx, dz)| ((dx * dx + dz * dz) as f64).sqrt() * cs < reach)
        .collect();
    let walkable: Vec<bool> = (0..n)
        .map(|i| {
            if !open[i] {
                return false;
            }
            let (x, z) = ((i % nx) as i64, (i / nx) as i64);
            offsets.iter().all(|&(dx, dz)| {
                let (xx, zz) = (x + dx, z + dz);
                xx >= 0 && zz >= 0 && xx < nx as i64 && zz < nz as i64 && open[zz as usize * nx + xx as usize]
            })
        })
        .collect();

    if !walkable.iter().any(|&w| w) {
        return Err(NavError::NoNavigableSurface);
    }
    let floor_f32: Vec<f32> = floor.iter().map(|&f| f as f32).collect();
    NavGrid::from_parts(origin, cs, nx, nz, walkable, floor_f32)
}

/// Height range of the part of a triangle lying over the XZ rectangle
/// `[x0, x1] x [z0, z1]` (boundaries inclusive), or `None` if they do not
/// overlap.
fn clipped_height_range(tri: &[Vec3; 3], x0: f64, x1: f64, z0: f64, z1: f64) -> Option<(f64, f64)> {
    let mut poly: Vec<Vec3> = tri.to_vec();
    let planes: [(usize, f64, f64); 4] = [(0, x0, 1.0), (0, x1, -1.0), (2, z0, 1.0), (2, z1, -1.0)];
    for (axis, value, sign) in planes {
        if poly.is_empty() {
            return None;
        }
        let inside = |p: &Vec3| (p[axis] - value) * sign >= 0.0;
        let mut out = Vec::with_capacity(poly.len() + 2);
        for i in 0..poly.len() {
            let a = poly[i];
            let b = poly[(i + 1) % poly.len()];
            let (ia, ib) = (inside(&a), inside(&b));
            if ia {
                out.push(a);
            }
            if ia != ib {
                let t = (value - a[axis]) / (b[axis] - a[axis]);
                let mut p = a + (b - a) * t;
                p[axis] = value;
                out.push(p);
            }
        }
        poly = out;
    }
    if poly.is_empty() {
        return None;
    }
    Some(poly.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v.y), hi.max(v.y))))
}
