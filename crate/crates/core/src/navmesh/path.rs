use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{Cell, NavError, NavGrid, NavResult};
use crate::geom::Vec3;

/// Integer cost of a straight step; a cell edge is one million units.
pub const COST_STRAIGHT: u64 = 1_000_000;
/// Integer cost of a diagonal step, `round(sqrt(2) * COST_STRAIGHT)`.
/// Integer costs keep A* and Dijkstra comparisons exact.
pub const COST_DIAGONAL: u64 = 1_414_214;

/// A geodesic over cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub cells: Vec<Cell>,
    pub waypoints: Vec<Vec3>,
    /// Sum of distances between consecutive waypoints, meters.
    pub geodesic_length: f64,
    /// Search cost in integer units (see [`COST_STRAIGHT`]).
    pub cost: u64,
}

impl NavGrid {
    /// Walkable 8-neighbors with their step cost. Diagonal moves need both
    /// adjacent orthogonal cells to be walkable (no corner cutting).
    pub(crate) fn neighbors(&self, c: Cell) -> impl Iterator<Item = (Cell, u64)> + '_ {
        const DIRS: [(i32, i32); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
        let (nx, nz) = (self.dims().0 as i32, self.dims().1 as i32);
        let open = move |x: i32, z: i32| x >= 0 && z >= 0 && x < nx && z < nz && self.is_walkable(Cell::new(x as u32, z as u32));
        DIRS.iter().filter_map(move |&(dx, dz)| {
            let (x, z) = (c.x as i32 + dx, c.z as i32 + dz);
            if !open(x, z) {
                return None;
            }
            if dx != 0 && dz != 0 {
                if !open(c.x as i32 + dx, c.z as i32) || !open(c.x as i32, c.z as i32 + dz) {
                    return None;
                }
                Some((Cell::new(x as u32, z as u32), COST_DIAGONAL))
            } else {
                Some((Cell::new(x as u32, z as u32), COST_STRAIGHT))
            }
        })
    }

    /// Converts integer path cost to meters.
    pub fn cost_to_meters(&self, cost: u64) -> f64 {
        cost as f64 / COST_STRAIGHT as f64 * self.cell_size()
    }

    /// A* between two walkable cells with the octile heuristic.
    pub fn astar(&self, start: Cell, goal: Cell) -> Option<(u64, Vec<Cell>)> {
        if !self.is_walkable(start) || !self.is_walkable(goal) {
            return None;
        }
        if self.island_of(start) != self.island_of(goal) {
            return None;
        }
        let h = |c: Cell| {
            let dx = (c.x as i64 - goal.x as i64).unsigned_abs();
            let dz = (c.z as i64 - goal.z as i64).unsigned_abs();
            let (lo, hi) = if dx < dz { (dx, dz) } else { (dz, dx) };
            lo * COST_DIAGONAL + (hi - lo) * COST_STRAIGHT
        };
        let n = self.cell_count();
        let mut g = vec![u64::MAX; n];
        let mut parent = vec![usize::MAX; n];
        let mut closed = vec![false; n];
        let mut open = BinaryHeap::new();
        let s = self.index(start);
        g[s] = 0;
        open.push(Reverse((h(start), 0u64, s)));
        while let Some(Reverse((_, gc, i))) = open.pop() {
            if closed[i] || gc > g[i] {
                continue;
            }
            closed[i] = true;
            let c = self.cell_of_index(i);
            if c == goal {
                let mut cells = vec![c];
                let mut k = i;
                while parent[k] != usize::MAX {
                    k = parent[k];
                    cells.push(self.cell_of_index(k));
                }
                cells.reverse();
                return Some((gc, cells));
            }
            for (nb, step) in self.neighbors(c) {
                let j = self.index(nb);
                let ng = gc + step;
                if !closed[j] && ng < g[j] {
                    g[j] = ng;
                    parent[j] = i;
                    open.push(Reverse((ng + h(nb), ng, j)));
                }
            }
        }
        None
    }

    pub fn path_between_cells(&self, start: Cell, goal: Cell) -> NavResult<Path> {
        let (cost, cells) = self.astar(start, goal).ok_or(NavError::Unreachable)?;
        let waypoints: Vec<Vec3> = cells.iter().map(|&c| self.cell_center(c)).collect();
        let geodesic_length = waypoints.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        Ok(Path {
            cells,
            waypoints,
            geodesic_length,
            cost,
        })
    }
}

/// Geodesic between two points: both are snapped to the grid, then joined
/// by A*. Points on different islands are unreachable.
pub fn shortest_path(grid: &NavGrid, start: &Vec3, goal: &Vec3) -> NavResult<Path> {
    let s = grid.snap(start).ok_or(NavError::NotNavigable(*start))?;
    let g = grid.snap(goal).ok_or(NavError::NotNavigable(*goal))?;
    grid.path_between_cells(s, g)
}

/// Single-source geodesic distances to a goal point over the whole grid.
#[derive(Debug, Clone)]
pub struct DistanceField {
    goal: Vec3,
    goal_cell: Cell,
    /// Meters from each cell center to the goal; infinite if unreachable.
    dist: Vec<f64>,
}

impl DistanceField {
    pub fn new(grid: &NavGrid, goal: Vec3) -> NavResult<Self> {
        let goal_cell = grid.snap(&goal).ok_or(NavError::NotNavigable(goal))?;
        let n = grid.cell_count();
        let mut cost = vec![u64::MAX; n];
        let mut heap = BinaryHeap::new();
        let s = grid.index(goal_cell);
        cost[s] = 0;
        heap.push(Reverse((0u64, s)));
        while let Some(Reverse((c, i))) = heap.pop() {
            if c > cost[i] {
                continue;
            }
            for (nb, step) in grid.neighbors(grid.cell_of_index(i)) {
                let j = grid.index(nb);
                if c + step < cost[j] {
                    cost[j] = c + step;
                    heap.push(Reverse((c + step, j)));
                }
            }
        }
        // Measure from the goal point itself rather than its cell center.
        let offset = horizontal(&goal, &grid.cell_center(goal_cell));
        let dist = cost
            .iter()
            .map(|&c| if c == u64::MAX { f64::INFINITY } else { grid.cost_to_meters(c) + offset })
            .collect();
        Ok(Self { goal, goal_cell, dist })
    }

    pub fn goal(&self) -> Vec3 {
        self.goal
    }

    pub fn goal_cell(&self) -> Cell {
        self.goal_cell
    }

    pub fn cell_distance(&self, grid: &NavGrid, c: Cell) -> f64 {
        self.dist[grid.index(c)]
    }

    /// Geodesic distance from a point to the goal: the best cell-center
    /// distance in the 3x3 neighborhood plus the straight hop to that
    /// center. Near the goal the direct distance is used. `None` when the
    /// point is off the grid or cannot reach the goal.
    pub fn distance(&self, grid: &NavGrid, p: &Vec3) -> Option<f64> {
        let c = grid.cell_at(p)?;
        let mut best = f64::INFINITY;
        for nb in grid.window((c.x as i64, c.z as i64), 1) {
            let d = self.dist[grid.index(nb)];
            if d.is_finite() {
                best = best.min(d + horizontal(p, &grid.cell_center(nb)));
            }
        }
        let dx = c.x as i64 - self.goal_cell.x as i64;
        let dz = c.z as i64 - self.goal_cell.z as i64;
        if dx.abs() <= 1 && dz.abs() <= 1 && grid.island_of(c) == grid.island_of(self.goal_cell) {
            best = best.min(horizontal(p, &self.goal));
        }
        best.is_finite().then_some(best)
    }
}

fn horizontal(a: &Vec3, b: &Vec3) -> f64 {
    ((a.x - b.x).powi(2) + (a.z - b.z).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn open_grid(nx: usize, nz: usize, cs: f64) -> NavGrid {
        NavGrid::from_parts(Vec3::zeros(), cs, nx, nz, vec![true; nx * nz], vec![0.0; nx * nz]).unwrap()
    }

    #[test]
    fn straight_corridor_length() {
        let g = open_grid(100, 10, 0.05);
        let p = shortest_path(&g, &Vec3::new(0.525, 0.0, 0.275), &Vec3::new(4.525, 0.0, 0.275)).unwrap();
        assert!((p.geodesic_length - 4.0).abs() <= 0.05);
        let sum: f64 = p.waypoints.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        assert!((p.geodesic_length - sum).abs() < 1e-6);
    }

    #[test]
    fn start_equals_goal() {
        let g = open_grid(10, 10, 0.1);
        let p = shortest_path(&g, &Vec3::new(0.55, 0.0, 0.55), &Vec3::new(0.52, 0.0, 0.58)).unwrap();
        assert_eq!(p.waypoints.len(), 1);
        assert_eq!(p.geodesic_length, 0.0);
    }

    #[test]
    fn open_rectangle_within_octile_bound() {
        let g = open_grid(120, 80, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let a = Cell::new(rng.random_range(0..120), rng.random_range(0..80));
            let b = Cell::new(rng.random_range(0..120), rng.random_range(0..80));
            let p = g.path_between_cells(a, b).unwrap();
            let euclid = (g.cell_center(a) - g.cell_center(b)).norm();
            assert!(p.geodesic_length >= euclid - 1e-9);
            assert!(p.geodesic_length <= euclid * 1.0824 + 1e-9);
        }
    }

    #[test]
    fn different_islands_are_unreachable() {
        let g = NavGrid::from_ascii(Vec3::zeros(), 1.0, &["..#..", "..#..", "..#.."]).unwrap();
        let err = shortest_path(&g, &Vec3::new(0.5, 0.0, 0.5), &Vec3::new(4.5, 0.0, 0.5)).unwrap_err();
        assert!(matches!(err, NavError::Unreachable));
        let err = shortest_path(&g, &Vec3::new(0.5, 0.0, 0.5), &Vec3::new(40.0, 0.0, 0.5)).unwrap_err();
        assert!(matches!(err, NavError::NotNavigable(_)));
    }

    #[test]
    fn no_corner_cutting() {
        let g = NavGrid::from_ascii(Vec3::zeros(), 1.0, &[".#", ".."]).unwrap();
        let (cost, cells) = g.astar(Cell::new(0, 0), Cell::new(1, 1)).unwrap();
        assert_eq!(cost, 2 * COST_STRAIGHT);
        assert_eq!(cells.len(), 3);
    }

    #[test]
    fn symmetric_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let rows: Vec<String> = (0..15)
                .map(|_| (0..15).map(|_| if rng.random_bool(0.25) { '#' } else { '.' }).collect())
                .collect();
            let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
            let g = NavGrid::from_ascii(Vec3::zeros(), 1.0, &refs).unwrap();
            let cells: Vec<Cell> = (0..g.cell_count()).map(|i| g.cell_of_index(i)).filter(|&c| g.is_walkable(c)).collect();
            for _ in 0..10 {
                let a = cells[rng.random_range(0..cells.len())];
                let b = cells[rng.random_range(0..cells.len())];
                assert_eq!(g.astar(a, b).map(|r| r.0), g.astar(b, a).map(|r| r.0));
            }
        }
    }

    #[test]
    fn distance_field_agrees_with_astar() {
        let g = NavGrid::from_ascii(Vec3::zeros(), 0.5, &["........", "..####..", "......#.", ".####.#.", "........"]).unwrap();
        let goal = g.cell_center(Cell::new(7, 0));
        let field = DistanceField::new(&g, goal).unwrap();
        for i in 0..g.cell_count() {
            let c = g.cell_of_index(i);
            if !g.is_walkable(c) {
                continue;
            }
            let (cost, _) = g.astar(c, Cell::new(7, 0)).unwrap();
            assert!((field.cell_distance(&g, c) - g.cost_to_meters(cost)).abs() < 1e-12);
        }
        assert_eq!(field.distance(&g, &goal), Some(0.0));
    }
}
