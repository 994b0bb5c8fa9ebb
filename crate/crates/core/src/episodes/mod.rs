//! Image-goal navigation episodes: generation on the largest island,
//! validity checks, summary statistics, and JSON persistence.

mod io;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec3;
use crate::navmesh::{Cell, Embodiment, NavGrid};

pub use io::{load_episodes, load_episodes_with_warnings, parse_episodes, save_episodes, to_json};

/// Episodes are only generated on islands whose enclosing radius exceeds
/// this, which keeps agents off beds and tables.
pub const MIN_ISLAND_RADIUS: f64 = 2.0;

/// Total sampling attempts before generation gives up.
pub const MAX_ATTEMPTS: usize = 100_000;

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error("navigation grid has no islands")]
    NoIsland,
    #[error("largest island radius {radius:.3} m does not exceed {MIN_ISLAND_RADIUS} m")]
    IslandTooSmall { radius: f64 },
    #[error("rejection budget exhausted: {generated} of {requested} episodes after {attempts} attempts")]
    BudgetExceeded {
        requested: usize,
        generated: usize,
        attempts: usize,
    },
    #[error("episode set is empty")]
    Empty,
    #[error("episode file: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            other => Err(format!("unknown split `{other}` (expected train or val)")),
        }
    }
}

/// One navigation task. Positions are floor points in meters (Y-up), yaws
/// in radians in `[-pi, pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub episode_id: u64,
    pub scene_id: String,
    pub start_position: Vec3,
    pub start_yaw: f64,
    pub goal_position: Vec3,
    pub goal_yaw: f64,
    pub geodesic_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSet {
    pub scene_id: String,
    pub split: Split,
    pub seed: u64,
    pub embodiment: Embodiment,
    pub episodes: Vec<Episode>,
}

impl EpisodeSet {
    /// Ids must be exactly `0..len` in order.
    pub fn check_ids(&self) -> Result<(), EpisodeError> {
        for (i, e) in self.episodes.iter().enumerate() {
            if e.episode_id != i as u64 {
                return Err(EpisodeError::Schema(format!(
                    "episode ids must be dense from 0; position {i} has id {}",
                    e.episode_id
                )));
            }
        }
        Ok(())
    }

    pub fn get(&self, id: u64) -> Option<&Episode> {
        self.episodes.get(id as usize).filter(|e| e.episode_id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpisodeStats {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

pub fn episode_stats(set: &EpisodeSet) -> Result<EpisodeStats, EpisodeError> {
    let lengths: Vec<f64> = set.episodes.iter().map(|e| e.geodesic_length).collect();
    if lengths.is_empty() {
        return Err(EpisodeError::Empty);
    }
    let min = lengths.iter().copied().fold(f64::INFINITY, f64::min);
    let max = lengths.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
    Ok(EpisodeStats {
        count: lengths.len(),
        min,
        max,
        mean,
    })
}

/// Uniform point sampler over an island: uniform cell, then uniform jitter
/// inside it, placed on the cell's floor.
pub struct IslandSampler<'a> {
    grid: &'a NavGrid,
    cells: Vec<Cell>,
}

impl<'a> IslandSampler<'a> {
    pub fn new(grid: &'a NavGrid, island: u16) -> Self {
        Self {
            grid,
            cells: grid.island_cells(island),
        }
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> (Cell, Vec3) {
        let cell = self.cells[rng.random_range(0..self.cells.len())];
        let cs = self.grid.cell_size();
        let o = self.grid.origin();
        // Stay strictly inside the cell so the point snaps back to it.
        let jx: f64 = rng.random_range(0.01..0.99);
        let jz: f64 = rng.random_range(0.01..0.99);
        let y = self.grid.floor_height(cell).expect("island cells are walkable") as f64;
        let p = Vec3::new(o.x + (cell.x as f64 + jx) * cs, y, o.z + (cell.z as f64 + jz) * cs);
        (cell, p)
    }
}

fn sample_yaw<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(-PI..PI)
}

/// Samples `n` valid episodes on the grid's largest island.
///
/// A candidate is kept when start and goal both lie on the largest island,
/// the goal is reachable, and the geodesic exceeds the success radius (so
/// no episode is solved at step zero). Output depends only on the inputs.
pub fn generate_episodes(
    grid: &NavGrid,
    embodiment: &Embodiment,
    n: usize,
    seed: u64,
    scene_id: &str,
    split: Split,
) -> Result<EpisodeSet, EpisodeError> {
    let island = grid.largest_island().ok_or(EpisodeError::NoIsland)?;
    if island.enclosing_radius <= MIN_ISLAND_RADIUS {
        return Err(EpisodeError::IslandTooSmall {
            radius: island.enclosing_radius,
        });
    }
    let sampler = IslandSampler::new(grid, island.id);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut episodes = Vec::with_capacity(n);
    let mut attempts = 0;
    while episodes.len() < n {
        if attempts >= MAX_ATTEMPTS {
            return Err(EpisodeError::BudgetExceeded {
                requested: n,
                generated: episodes.len(),
                attempts,
            });
        }
        attempts += 1;
        let (start_cell, start) = sampler.sample(&mut rng);
        let (goal_cell, goal) = sampler.sample(&mut rng);
        let start_yaw = sample_yaw(&mut rng);
        let goal_yaw = sample_yaw(&mut rng);
        let Ok(path) = grid.path_between_cells(start_cell, goal_cell) else {
            continue;
        };
        if path.geodesic_length <= embodiment.success_radius {
            continue;
        }
        episodes.push(Episode {
            episode_id: episodes.len() as u64,
            scene_id: scene_id.to_string(),
            start_position: start,
            start_yaw,
            goal_position: goal,
            goal_yaw,
            geodesic_length: path.geodesic_length,
        });
    }
    log::debug!("generated {n} episodes in {attempts} attempts");
    Ok(EpisodeSet {
        scene_id: scene_id.to_string(),
        split,
        seed,
        embodiment: embodiment.clone(),
        episodes,
    })
}

/// Checks an episode against a grid: both ends snap onto the largest
/// island, the goal is reachable, and the geodesic exceeds the success
/// radius.
pub fn validate_episode(grid: &NavGrid, embodiment: &Embodiment, episode: &Episode) -> Result<(), String> {
    let largest = grid.largest_island().ok_or("grid has no islands")?.id;
    let snap = |p: &Vec3, what: &str| {
        grid.snap(p)
            .filter(|&c| grid.island_of(c) == Some(largest))
            .ok_or_else(|| format!("{what} is not on the largest island"))
    };
    let s = snap(&episode.start_position, "start")?;
    let g = snap(&episode.goal_position, "goal")?;
    let path = grid.path_between_cells(s, g).map_err(|_| "goal is unreachable".to_string())?;
    if path.geodesic_length <= embodiment.success_radius {
        return Err(format!(
            "geodesic {:.3} m does not exceed the success radius",
            path.geodesic_length
        ));
    }
    Ok(())
}
