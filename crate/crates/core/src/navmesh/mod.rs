//! Walkable-area grids for a cylinder agent.
//!
//! A [`NavGrid`] rasterizes the scene's floor into square cells in the XZ
//! plane. Walkable cells are grouped into islands (4-connected components)
//! numbered by decreasing area, so island 0 is always the largest one.
//! Geodesic queries run A* over the 8-connected grid.

mod build;
mod cache;
mod circle;
mod embodiment;
mod path;

use thiserror::Error;

use crate::geom::Vec3;

pub use build::{build_navgrid, DEFAULT_CELL_SIZE, MAX_CELL_SIZE, MIN_CELL_SIZE, WALKABLE_CLIMB, WALKABLE_SLOPE_DEG};
pub use cache::{read_navgrid, write_navgrid, NAVG_MAGIC, NAVG_VERSION};
pub use circle::{min_enclosing_circle, Circle};
pub use embodiment::Embodiment;
pub use path::{shortest_path, DistanceField, Path, COST_DIAGONAL, COST_STRAIGHT};

#[derive(Debug, Error)]
pub enum NavError {
    #[error("navigation grids are built from Y-up meshes; convert the scene first")]
    NotYUp,
    #[error("cell size {0} outside [{MIN_CELL_SIZE}, {MAX_CELL_SIZE}] m")]
    InvalidCellSize(f64),
    #[error("invalid embodiment: {0}")]
    InvalidEmbodiment(String),
    #[error("no navigable surface")]
    NoNavigableSurface,
    #[error("too many islands ({0}); at most 65535 are supported")]
    TooManyIslands(usize),
    #[error("point ({:.3}, {:.3}, {:.3}) is not on the navigable area", .0.x, .0.y, .0.z)]
    NotNavigable(Vec3),
    #[error("goal is unreachable from start")]
    Unreachable,
    #[error("malformed navgrid cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type NavResult<T> = Result<T, NavError>;

/// Horizontal search radius of [`NavGrid::snap`], meters.
pub const SNAP_HORIZONTAL: f64 = 0.5;
/// Vertical tolerance of [`NavGrid::snap`], meters.
pub const SNAP_VERTICAL: f64 = 0.5;

const NO_ISLAND: u16 = u16::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: u32,
    pub z: u32,
}

impl Cell {
    pub fn new(x: u32, z: u32) -> Self {
        Self { x, z }
    }
}

/// A connected component of the walkable area.
#[derive(Debug, Clone, PartialEq)]
pub struct Island {
    pub id: u16,
    pub cell_count: usize,
    /// Square meters.
    pub area: f64,
    /// Radius of the smallest circle enclosing the island's cell centers.
    pub enclosing_radius: f64,
    /// Center of that circle, `(x, z)`.
    pub enclosing_center: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavGrid {
    origin: Vec3,
    cell_size: f64,
    nx: usize,
    nz: usize,
    walkable: Vec<bool>,
    floor: Vec<f32>,
    island: Vec<u16>,
    islands: Vec<Island>,
}

impl NavGrid {
    /// Assembles a grid from a walkability mask and per-cell floor heights
    /// (row-major, index `z * nx + x`). Floor heights of non-walkable cells
    /// are ignored. Islands are labeled here.
    pub fn from_parts(
        origin: Vec3,
        cell_size: f64,
        nx: usize,
        nz: usize,
        walkable: Vec<bool>,
        floor: Vec<f32>,
    ) -> NavResult<Self> {
        if walkable.len() != nx * nz || floor.len() != nx * nz {
            return Err(NavError::Cache(format!(
                "grid buffers have {} / {} entries, expected {}",
                walkable.len(),
                floor.len(),
                nx * nz
            )));
        }
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(NavError::InvalidCellSize(cell_size));
        }
        let floor = floor
            .iter()
            .zip(&walkable)
            .map(|(&h, &w)| if w { h } else { f32::NAN })
            .collect();
        let mut grid = Self {
            origin,
            cell_size,
            nx,
            nz,
            walkable,
            floor,
            island: vec![NO_ISLAND; nx * nz],
            islands: Vec::new(),
        };
        grid.label_islands()?;
        Ok(grid)
    }

    /// Flat grid at height `origin.y` from a mask given as rows of `#`
    /// (blocked) and `.` (walkable); handy in tests.
    pub fn from_ascii(origin: Vec3, cell_size: f64, rows: &[&str]) -> NavResult<Self> {
        let nz = rows.len();
        let nx = rows.first().map_or(0, |r| r.len());
        let mut walkable = Vec::with_capacity(nx * nz);
        for r in rows {
            assert_eq!(r.len(), nx, "ragged ascii grid");
            walkable.extend(r.bytes().map(|b| b != b'#'));
        }
        let floor = vec![origin.y as f32; nx * nz];
        Self::from_parts(origin, cell_size, nx, nz, walkable, floor)
    }

    fn label_islands(&mut self) -> NavResult<()> {
        let mut raw = vec![u32::MAX; self.walkable.len()];
        let mut sizes: Vec<(usize, usize)> = Vec::new(); // (cell count, first cell)
        let mut queue = std::collections::VecDeque::new();
        for start in 0..self.walkable.len() {
            if !self.walkable[start] || raw[start] != u32::MAX {
                continue;
            }
            let label = sizes.len() as u32;
            raw[start] = label;
            queue.push_back(start);
            let mut count = 0;
            while let Some(i) = queue.pop_front() {
                count += 1;
                let (x, z) = (i % self.nx, i / self.nx);
                let mut visit = |j: usize| {
                    if self.walkable[j] && raw[j] == u32::MAX {
                        raw[j] = label;
                        queue.push_back(j);
                    }
                };
                if x > 0 {
                    visit(i - 1);
                }
                if x + 1 < self.nx {
                    visit(i + 1);
                }
                if z > 0 {
                    visit(i - self.nx);
                }
                if z + 1 < self.nz {
                    visit(i + self.nx);
                }
            }
            sizes.push((count, start));
        }
        if sizes.len() > NO_ISLAND as usize {
            return Err(NavError::TooManyIslands(sizes.len()));
        }
        let mut ranked: Vec<usize> = (0..sizes.len()).collect();
        ranked.sort_by(|&a, &b| sizes[b].0.cmp(&sizes[a].0).then(sizes[a].1.cmp(&sizes[b].1)));
        let mut relabel = vec![0u16; sizes.len()];
        for (new, &old) in ranked.iter().enumerate() {
            relabel[old] = new as u16;
        }
        for (dst, &r) in self.island.iter_mut().zip(&raw) {
            *dst = if r == u32::MAX { NO_ISLAND } else { relabel[r as usize] };
        }

        // Enclosing circles only depend on the convex hull, so boundary
        // cells suffice.
        let mut boundary: Vec<Vec<(f64, f64)>> = vec![Vec::new(); sizes.len()];
        for i in 0..self.island.len() {
            let id = self.island[i];
            if id == NO_ISLAND {
                continue;
            }
            let (x, z) = (i % self.nx, i / self.nx);
            let inner = x > 0
                && z > 0
                && x + 1 < self.nx
                && z + 1 < self.nz
                && [i - 1, i + 1, i - self.nx, i + self.nx]
                    .iter()
                    .all(|&j| self.island[j] == id);
            if !inner {
                let c = self.cell_center_xz(Cell::new(x as u32, z as u32));
                boundary[id as usize].push(c);
            }
        }
        let area_per_cell = self.cell_size * self.cell_size;
        self.islands = ranked
            .iter()
            .enumerate()
            .map(|(new, &old)| {
                let circle = min_enclosing_circle(&boundary[new]);
                Island {
                    id: new as u16,
                    cell_count: sizes[old].0,
                    area: sizes[old].0 as f64 * area_per_cell,
                    enclosing_radius: circle.radius,
                    enclosing_center: circle.center,
                }
            })
            .collect();
        Ok(())
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.nz)
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.nz
    }

    pub fn index(&self, c: Cell) -> usize {
        c.z as usize * self.nx + c.x as usize
    }

    pub fn cell_of_index(&self, i: usize) -> Cell {
        Cell::new((i % self.nx) as u32, (i / self.nx) as u32)
    }

    pub fn walkable_mask(&self) -> &[bool] {
        &self.walkable
    }

    pub fn is_walkable(&self, c: Cell) -> bool {
        self.walkable[self.index(c)]
    }

    pub fn walkable_count(&self) -> usize {
        self.walkable.iter().filter(|&&w| w).count()
    }

    pub fn walkable_area(&self) -> f64 {
        self.walkable_count() as f64 * self.cell_size * self.cell_size
    }

    /// Floor height of a walkable cell.
    pub fn floor_height(&self, c: Cell) -> Option<f32> {
        let i = self.index(c);
        self.walkable[i].then_some(self.floor[i])
    }

    pub fn island_of(&self, c: Cell) -> Option<u16> {
        let id = self.island[self.index(c)];
        (id != NO_ISLAND).then_some(id)
    }

    /// Islands sorted by area, largest first (id order).
    pub fn islands(&self) -> &[Island] {
        &self.islands
    }

    pub fn largest_island(&self) -> Option<&Island> {
        self.islands.first()
    }

    pub fn island_cells(&self, id: u16) -> Vec<Cell> {
        (0..self.island.len())
            .filter(|&i| self.island[i] == id)
            .map(|i| self.cell_of_index(i))
            .collect()
    }

    pub(crate) fn island_ids(&self) -> &[u16] {
        &self.island
    }

    pub(crate) fn floor_heights(&self) -> &[f32] {
        &self.floor
    }

    fn cell_center_xz(&self, c: Cell) -> (f64, f64) {
        (
            self.origin.x + (c.x as f64 + 0.5) * self.cell_size,
            self.origin.z + (c.z as f64 + 0.5) * self.cell_size,
        )
    }

    /// Cell center on the floor (walkable cells) or at grid height.
    pub fn cell_center(&self, c: Cell) -> Vec3 {
        let (x, z) = self.cell_center_xz(c);
        let y = self.floor_height(c).map_or(self.origin.y, |h| h as f64);
        Vec3::new(x, y, z)
    }

    /// Cell whose XZ square contains the point, if inside the grid.
    pub fn cell_at(&self, p: &Vec3) -> Option<Cell> {
        let fx = ((p.x - self.origin.x) / self.cell_size).floor();
        let fz = ((p.z - self.origin.z) / self.cell_size).floor();
        if fx < 0.0 || fz < 0.0 || fx >= self.nx as f64 || fz >= self.nz as f64 {
            return None;
        }
        Some(Cell::new(fx as u32, fz as u32))
    }

    /// Cells `(x + dx, z + dz)` for `dx, dz` in `-r..=r`, clipped to the grid.
    pub(crate) fn window(&self, center: (i64, i64), r: i64) -> impl Iterator<Item = Cell> + '_ {
        let (cx, cz) = center;
        let x0 = (cx - r).max(0);
        let x1 = (cx + r).min(self.nx as i64 - 1);
        let z0 = (cz - r).max(0);
        let z1 = (cz + r).min(self.nz as i64 - 1);
        (z0..=z1).flat_map(move |z| (x0..=x1).map(move |x| Cell::new(x as u32, z as u32)))
    }

    /// Nearest walkable cell within 0.5 m horizontally whose floor is within
    /// 0.5 m of the point's height. Ties go to the lower cell index.
    pub fn snap(&self, p: &Vec3) -> Option<Cell> {
        let fx = ((p.x - self.origin.x) / self.cell_size).floor();
        let fz = ((p.z - self.origin.z) / self.cell_size).floor();
        if !fx.is_finite() || !fz.is_finite() {
            return None;
        }
        let r = (SNAP_HORIZONTAL / self.cell_size).ceil() as i64 + 1;
        let (fx, fz) = (fx as i64, fz as i64);
        if fx < -r || fz < -r || fx > self.nx as i64 + r || fz > self.nz as i64 + r {
            return None;
        }
        let mut best: Option<(f64, Cell)> = None;
        for c in self.window((fx, fz), r) {
            let Some(h) = self.floor_height(c) else { continue };
            if (h as f64 - p.y).abs() > SNAP_VERTICAL {
                continue;
            }
            let (x, z) = self.cell_center_xz(c);
            let d2 = (x - p.x).powi(2) + (z - p.z).powi(2);
            if d2 > SNAP_HORIZONTAL * SNAP_HORIZONTAL {
                continue;
            }
            if best.is_none_or(|(bd, bc)| d2 < bd || (d2 == bd && self.index(c) < self.index(bc))) {
                best = Some((d2, c));
            }
        }
        best.map(|(_, c)| c)
    }

    /// True when every cell the segment `a -> b` passes over is walkable and
    /// belongs to `island` (sampled at a quarter cell spacing).
    pub fn segment_on_island(&self, a: &Vec3, b: &Vec3, island: u16) -> bool {
        let d = b - a;
        let len = (d.x * d.x + d.z * d.z).sqrt();
        let steps = ((len / (self.cell_size * 0.25)).ceil() as usize).max(1);
        (0..=steps).all(|k| {
            let p = a + d * (k as f64 / steps as f64);
            self.cell_at(&p).is_some_and(|c| self.island_of(c) == Some(island))
        })
    }
}
