//! Binary navgrid cache, little-endian:
//!
//! ```text
//! magic "NAVG" | version u16 | origin 3 x f32 | cell_size f32 | nx u32 | nz u32
//! walkable bitset, ceil(nx*nz / 8) bytes, bit i = cell i, LSB first
//! floor height f32 per walkable cell, cell-index order
//! island id u16 per walkable cell, cell-index order
//! ```
//! Cell index is `z * nx + x`.

use std::io::{Read, Write};

use super::{NavError, NavGrid, NavResult};
use crate::geom::Vec3;

pub const NAVG_MAGIC: &[u8; 4] = b"NAVG";
pub const NAVG_VERSION: u16 = 1;

pub fn write_navgrid<W: Write>(grid: &NavGrid, mut w: W) -> NavResult<()> {
    let (nx, nz) = grid.dims();
    let o = grid.origin();
    let mut buf = Vec::with_capacity(32 + grid.cell_count());
    buf.extend_from_slice(NAVG_MAGIC);
    buf.extend_from_slice(&NAVG_VERSION.to_le_bytes());
    for c in [o.x, o.y, o.z, grid.cell_size()] {
        buf.extend_from_slice(&(c as f32).to_le_bytes());
    }
    buf.extend_from_slice(&(nx as u32).to_le_bytes());
    buf.extend_from_slice(&(nz as u32).to_le_bytes());
    let mask = grid.walkable_mask();
    let mut bits = vec![0u8; mask.len().div_ceil(8)];
    for (i, &w) in mask.iter().enumerate() {
        if w {
            bits[i / 8] |= 1 << (i % 8);
        }
    }
    buf.extend_from_slice(&bits);
    for (i, &h) in grid.floor_heights().iter().enumerate() {
        if mask[i] {
            buf.extend_from_slice(&h.to_le_bytes());
        }
    }
    for (i, &id) in grid.island_ids().iter().enumerate() {
        if mask[i] {
            buf.extend_from_slice(&id.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> NavResult<&'a [u8]> {
        let s = self
            .bytes
            .get(self.pos..self.pos + n)
            .ok_or_else(|| NavError::Cache(format!("truncated while reading {what} at byte {}", self.pos)))?;
        self.pos += n;
        Ok(s)
    }

    fn f32(&mut self, what: &str) -> NavResult<f32> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> NavResult<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn read_navgrid<R: Read>(mut r: R) -> NavResult<NavGrid> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut c = Cursor { bytes: &bytes, pos: 0 };
    if c.take(4, "magic")? != NAVG_MAGIC {
        return Err(NavError::Cache("bad magic (expected NAVG)".into()));
    }
    let version = u16::from_le_bytes(c.take(2, "version")?.try_into().unwrap());
    if version != NAVG_VERSION {
        return Err(NavError::Cache(format!("unsupported version {version}")));
    }
    let origin = Vec3::new(c.f32("origin")? as f64, c.f32("origin")? as f64, c.f32("origin")? as f64);
    let cell_size = c.f32("cell_size")? as f64;
    let nx = c.u32("dims")? as usize;
    let nz = c.u32("dims")? as usize;
    let n = nx
        .checked_mul(nz)
        .filter(|&n| n <= bytes.len().saturating_mul(8))
        .ok_or_else(|| NavError::Cache(format!("implausible dims {nx} x {nz}")))?;
    let bits = c.take(n.div_ceil(8), "walkable bitset")?;
    let walkable: Vec<bool> = (0..n).map(|i| bits[i / 8] >> (i % 8) & 1 == 1).collect();
    let count = walkable.iter().filter(|&&w| w).count();
    let mut floor = vec![f32::NAN; n];
    let heights = c.take(4 * count, "floor heights")?;
    let ids = c.take(2 * count, "island ids")?;
    if c.pos != bytes.len() {
        return Err(NavError::Cache(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    let mut stored_ids = Vec::with_capacity(count);
    let mut k = 0;
    for (i, &w) in walkable.iter().enumerate() {
        if w {
            floor[i] = f32::from_le_bytes(heights[4 * k..4 * k + 4].try_into().unwrap());
            stored_ids.push(u16::from_le_bytes(ids[2 * k..2 * k + 2].try_into().unwrap()));
            k += 1;
        }
    }
    let grid = NavGrid::from_parts(origin, cell_size, nx, nz, walkable, floor)?;
    let relabeled: Vec<u16> = grid
        .island_ids()
        .iter()
        .zip(grid.walkable_mask())
        .filter(|(_, &w)| w)
        .map(|(&id, _)| id)
        .collect();
    if relabeled != stored_ids {
        return Err(NavError::Cache("island ids are inconsistent with the walkable mask".into()));
    }
    Ok(grid)
}
