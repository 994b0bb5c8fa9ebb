use serde::Serialize;

use super::{compute_reward, Action, EpisodeResult, RewardTerms, SimConfig, SimError, StepContext, TerminationReason};
use crate::episodes::Episode;
use crate::geom::{heading, wrap_angle, Vec3};
use crate::mesh::Mesh;
use crate::navmesh::{DistanceField, NavGrid};
use crate::render::{camera_intrinsics, render_frame, Frame, Pose};
use crate::spatial::{Bvh, DEFAULT_LOS_EPS};

/// Immutable per-scene data shared by every episode.
#[derive(Debug)]
pub struct SceneAssets {
    pub scene_id: String,
    pub mesh: Mesh,
    pub bvh: Bvh,
    pub grid: NavGrid,
}

impl SceneAssets {
    pub fn new(scene_id: impl Into<String>, mesh: Mesh, grid: NavGrid) -> Self {
        let bvh = Bvh::build(&mesh);
        Self {
            scene_id: scene_id.into(),
            mesh,
            bvh,
            grid,
        }
    }
}

/// Destination of a forward move, with the height snapped to the floor, or
/// `None` if the swept segment leaves the largest island.
pub fn try_forward(grid: &NavGrid, position: &Vec3, yaw: f64, step: f64) -> Option<Vec3> {
    let target = position + heading(yaw) * step;
    if !grid.segment_on_island(position, &target, 0) {
        return None;
    }
    let floor = grid.floor_height(grid.cell_at(&target)?)?;
    Some(Vec3::new(target.x, floor as f64, target.z))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimState {
    pub position: Vec3,
    pub yaw: f64,
    pub step_index: u32,
    pub cumulative_reward: f64,
    pub collided_last: bool,
    pub stopped: bool,
    pub distance_to_goal: f64,
    /// Gated angle value from the last step.
    pub theta_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepOutcome {
    pub reward: f64,
    pub reward_terms: RewardTerms,
    pub done: bool,
    pub success: bool,
    pub collided: bool,
    pub distance_to_goal: f64,
    pub steps: u32,
}

pub struct Simulator<'a> {
    scene: &'a SceneAssets,
    config: SimConfig,
    episode: Episode,
    field: DistanceField,
    state: SimState,
    success: bool,
}

impl<'a> Simulator<'a> {
    /// Prepares an episode and places the agent at its start pose.
    pub fn new(scene: &'a SceneAssets, episode: &Episode, config: &SimConfig) -> Result<Self, SimError> {
        config.validate().map_err(SimError::Config)?;
        if episode.scene_id != scene.scene_id {
            return Err(SimError::SceneMismatch {
                episode: episode.episode_id,
                episode_scene: episode.scene_id.clone(),
                scene: scene.scene_id.clone(),
            });
        }
        let grid = &scene.grid;
        for (what, p) in [("start", &episode.start_position), ("goal", &episode.goal_position)] {
            let on_island = grid.snap(p).is_some_and(|c| grid.island_of(c) == Some(0));
            if !on_island {
                return Err(SimError::InvalidEpisode(
                    episode.episode_id,
                    format!("{what} position is not on the largest island"),
                ));
            }
        }
        let field = DistanceField::new(grid, episode.goal_position)?;
        let state = Self::initial_state(grid, &field, episode, config)?;
        Ok(Self {
            scene,
            config: config.clone(),
            episode: episode.clone(),
            field,
            state,
            success: false,
        })
    }

    fn initial_state(grid: &NavGrid, field: &DistanceField, ep: &Episode, config: &SimConfig) -> Result<SimState, SimError> {
        let d = field
            .distance(grid, &ep.start_position)
            .ok_or_else(|| SimError::InvalidEpisode(ep.episode_id, "goal unreachable from start".into()))?;
        let theta = wrap_angle(ep.start_yaw - ep.goal_yaw).abs();
        Ok(SimState {
            position: ep.start_position,
            yaw: wrap_angle(ep.start_yaw),
            step_index: 0,
            cumulative_reward: 0.0,
            collided_last: false,
            stopped: false,
            distance_to_goal: d,
            theta_hat: if d < config.reward.r_g { theta } else { 0.0 },
        })
    }

    /// Returns the agent to the start pose.
    pub fn reset(&mut self) -> &SimState {
        self.state = Self::initial_state(&self.scene.grid, &self.field, &self.episode, &self.config)
            .expect("validated when the simulator was built");
        self.success = false;
        &self.state
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn episode(&self) -> &Episode {
        &self.episode
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn done(&self) -> bool {
        self.state.stopped || self.state.step_index >= self.config.max_steps
    }

    pub fn success(&self) -> bool {
        self.success
    }

    /// Geodesic distance from an arbitrary point to this episode's goal.
    pub fn distance_from(&self, p: &Vec3) -> Option<f64> {
        self.field.distance(&self.scene.grid, p)
    }

    pub fn goal_frame(&self) -> Frame {
        let e = &self.config.embodiment;
        let pose = Pose::from_agent(self.episode.goal_position, self.episode.goal_yaw, e);
        render_frame(&self.scene.mesh, &pose, &camera_intrinsics(e), self.config.background)
    }

    pub fn observation(&self) -> Frame {
        let e = &self.config.embodiment;
        let pose = Pose::from_agent(self.state.position, self.state.yaw, e);
        render_frame(&self.scene.mesh, &pose, &camera_intrinsics(e), self.config.background)
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome, SimError> {
        if self.done() {
            return Err(SimError::EpisodeDone);
        }
        let e = &self.config.embodiment;
        let grid = &self.scene.grid;
        let mut collided = false;
        match action {
            Action::MoveForward => match try_forward(grid, &self.state.position, self.state.yaw, e.forward_step) {
                Some(p) => self.state.position = p,
                None => collided = true,
            },
            Action::TurnLeft => self.state.yaw = wrap_angle(self.state.yaw + e.turn_angle()),
            Action::TurnRight => self.state.yaw = wrap_angle(self.state.yaw - e.turn_angle()),
            Action::Stop => self.state.stopped = true,
        }
        let d_prev = self.state.distance_to_goal;
        let d_cur = self
            .field
            .distance(grid, &self.state.position)
            .expect("agent stays on the goal's island");
        let theta_cur = wrap_angle(self.state.yaw - self.episode.goal_yaw).abs();
        let r_g = self.config.reward.r_g;
        let theta_hat_cur = if d_cur < r_g { theta_cur } else { 0.0 };
        let ctx = StepContext {
            d_prev,
            d_cur,
            theta_cur,
            theta_hat_prev: self.state.theta_hat,
            theta_hat_cur,
            action,
            collided,
        };
        let terms = compute_reward(&ctx, &self.config.reward);
        let reward = terms.total();
        self.state.step_index += 1;
        self.state.cumulative_reward += reward;
        self.state.collided_last = collided;
        self.state.distance_to_goal = d_cur;
        self.state.theta_hat = theta_hat_cur;
        self.success = self.state.stopped && d_cur <= r_g;
        Ok(StepOutcome {
            reward,
            reward_terms: terms,
            done: self.done(),
            success: self.success,
            collided,
            distance_to_goal: d_cur,
            steps: self.state.step_index,
        })
    }

    pub fn termination(&self) -> TerminationReason {
        classify_termination(&self.state, self.success, &self.episode, &self.scene.bvh, self.config.embodiment.camera_height)
    }

    pub fn result(&self) -> EpisodeResult {
        EpisodeResult {
            episode_id: self.episode.episode_id,
            success: self.success,
            steps: self.state.step_index,
            distance_to_goal: self.state.distance_to_goal,
            termination: self.termination(),
            reward: self.state.cumulative_reward,
        }
    }
}

/// Termination label for a finished episode. An unsuccessful STOP is split by
/// line of sight between the camera and the goal at camera height.
pub fn classify_termination(state: &SimState, success: bool, episode: &Episode, bvh: &Bvh, camera_height: f64) -> TerminationReason {
    if success {
        return TerminationReason::TargetReached;
    }
    if !state.stopped {
        return TerminationReason::MaxStepsReached;
    }
    let lift = Vec3::new(0.0, camera_height, 0.0);
    if bvh.line_of_sight(state.position + lift, episode.goal_position + lift, DEFAULT_LOS_EPS) {
        TerminationReason::EarlyStopGoalVisible
    } else {
        TerminationReason::EarlyStopGoalNotVisible
    }
}
