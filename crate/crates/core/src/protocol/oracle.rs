use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use super::{Observation, Policy, PolicyError};
use crate::episodes::Episode;
use crate::geom::{wrap_angle, yaw_towards, Vec3};
use crate::navmesh::{DistanceField, Embodiment, NavGrid};
use crate::render::Frame;
use crate::sim::{try_forward, Action};

/// The oracle stops once the geodesic distance drops to this fraction of
/// the success radius.
pub const STOP_FRACTION: f64 = 0.8;

#[derive(Clone)]
struct EpisodeState {
    position: Vec3,
    yaw: f64,
    field: DistanceField,
    waypoints: Vec<Vec3>,
    cursor: usize,
    last: Option<Action>,
    /// Turns still to make before a committed forward move (positive: left).
    pending_turns: i32,
    commit_forward: bool,
}

/// Shortest-path follower over the navgrid.
///
/// The oracle dead-reckons its own pose from the episode start, using the
/// same motion model as the simulator and the `collided` flag it is
/// given, so it needs nothing beyond the observation interface.
#[derive(Clone)]
pub struct OraclePolicy {
    grid: Arc<NavGrid>,
    embodiment: Embodiment,
    episodes: Arc<HashMap<u64, Episode>>,
    state: Option<EpisodeState>,
}

impl OraclePolicy {
    pub fn new(grid: Arc<NavGrid>, embodiment: Embodiment, episodes: &[Episode]) -> Self {
        Self {
            grid,
            embodiment,
            episodes: Arc::new(episodes.iter().map(|e| (e.episode_id, e.clone())).collect()),
            state: None,
        }
    }

    fn visible(&self, from: &Vec3, to: &Vec3) -> bool {
        self.grid.segment_on_island(from, to, 0)
    }

    fn choose(&self, st: &mut EpisodeState) -> Result<Action, PolicyError> {
        let e = &self.embodiment;
        let grid = &*self.grid;
        let d = st
            .field
            .distance(grid, &st.position)
            .ok_or_else(|| PolicyError::Failed("goal unreachable from the current pose".into()))?;
        if d <= STOP_FRACTION * e.success_radius {
            return Ok(Action::Stop);
        }
        if st.pending_turns > 0 {
            st.pending_turns -= 1;
            return Ok(Action::TurnLeft);
        }
        if st.pending_turns < 0 {
            st.pending_turns += 1;
            return Ok(Action::TurnRight);
        }
        if std::mem::take(&mut st.commit_forward) {
            return Ok(Action::MoveForward);
        }
        if let Some(target) = self.target(st) {
            let err = wrap_angle(yaw_towards(target.x - st.position.x, target.z - st.position.z) - st.yaw);
            if err.abs() > e.turn_angle() / 2.0 {
                return Ok(if err > 0.0 { Action::TurnLeft } else { Action::TurnRight });
            }
            if try_forward(grid, &st.position, st.yaw, e.forward_step).is_some() {
                return Ok(Action::MoveForward);
            }
        }
        self.recover(st, d)
    }

    /// Farthest path waypoint in a straight walkable line from the agent.
    fn target(&self, st: &mut EpisodeState) -> Option<Vec3> {
        let n = st.waypoints.len();
        while st.cursor + 1 < n && self.visible(&st.position, &st.waypoints[st.cursor + 1]) {
            st.cursor += 1;
        }
        while !self.visible(&st.position, &st.waypoints[st.cursor]) {
            if st.cursor == 0 {
                return None;
            }
            st.cursor -= 1;
        }
        let step = self.embodiment.forward_step;
        while st.cursor + 1 < n && horizontal(&st.position, &st.waypoints[st.cursor]) < step {
            st.cursor += 1;
        }
        Some(st.waypoints[st.cursor])
    }

    /// Forward progress is blocked: commit to the reachable turn whose forward
    /// move lowers the geodesic distance the most (fewest turns on ties).
    fn recover(&self, st: &mut EpisodeState, d: f64) -> Result<Action, PolicyError> {
        let e = &self.embodiment;
        let turns = (2.0 * PI / e.turn_angle()).round() as i32;
        let mut best: Option<(f64, i32)> = None;
        for k in 0..turns {
            let k = if k <= turns / 2 { k } else { k - turns };
            let mut yaw = st.yaw;
            for _ in 0..k.unsigned_abs() {
                yaw = wrap_angle(yaw + k.signum() as f64 * e.turn_angle());
            }
            let Some(p) = try_forward(&self.grid, &st.position, yaw, e.forward_step) else {
                continue;
            };
            let Some(dp) = st.field.distance(&self.grid, &p) else { continue };
            if best.is_none_or(|(bd, bk)| dp < bd || (dp == bd && k.abs() < bk.abs())) {
                best = Some((dp, k));
            }
        }
        let (dp, k) = best.ok_or_else(|| PolicyError::Failed("agent is boxed in".into()))?;
        if dp >= d {
            log::debug!("oracle recovery without progress ({d:.3} -> {dp:.3})");
        }
        st.pending_turns = k;
        st.commit_forward = k != 0;
        Ok(match k.signum() {
            0 => Action::MoveForward,
            1 => {
                st.pending_turns -= 1;
                Action::TurnLeft
            }
            _ => {
                st.pending_turns += 1;
                Action::TurnRight
            }
        })
    }
}

fn horizontal(a: &Vec3, b: &Vec3) -> f64 {
    ((a.x - b.x).powi(2) + (a.z - b.z).powi(2)).sqrt()
}

impl Policy for OraclePolicy {
    fn reset(&mut self, _goal: &Frame, episode_id: u64) -> Result<(), PolicyError> {
        let ep = self.episodes.get(&episode_id).ok_or(PolicyError::UnknownEpisode(episode_id))?;
        let grid = &*self.grid;
        let field = DistanceField::new(grid, ep.goal_position).map_err(|e| PolicyError::Failed(e.to_string()))?;
        let path = crate::navmesh::shortest_path(grid, &ep.start_position, &ep.goal_position)
            .map_err(|e| PolicyError::Failed(format!("episode {episode_id}: {e}")))?;
        let mut waypoints = path.waypoints;
        waypoints.push(ep.goal_position);
        self.state = Some(EpisodeState {
            position: ep.start_position,
            yaw: wrap_angle(ep.start_yaw),
            field,
            waypoints,
            cursor: 0,
            last: None,
            pending_turns: 0,
            commit_forward: false,
        });
        Ok(())
    }

    fn act(&mut self, obs: &Observation<'_>) -> Result<Action, PolicyError> {
        let mut st = self.state.take().ok_or(PolicyError::NotReset)?;
        let e = &self.embodiment;
        match st.last {
            Some(Action::MoveForward) if !obs.collided => {
                st.position = try_forward(&self.grid, &st.position, st.yaw, e.forward_step)
                    .ok_or_else(|| PolicyError::Failed("pose estimate diverged from the simulator".into()))?;
            }
            Some(Action::TurnLeft) => st.yaw = wrap_angle(st.yaw + e.turn_angle()),
            Some(Action::TurnRight) => st.yaw = wrap_angle(st.yaw - e.turn_angle()),
            _ => {}
        }
        let action = self.choose(&mut st);
        if let Ok(a) = action {
            st.last = Some(a);
        }
        self.state = Some(st);
        action
    }

    fn needs_observations(&self) -> bool {
        false
    }
}
