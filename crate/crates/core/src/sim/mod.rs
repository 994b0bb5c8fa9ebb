//! Discrete-action image-goal navigation simulator.
//!
//! Distances to the goal are geodesic over the navgrid. A forward move is
//! taken only if the swept segment stays on the largest island; otherwise
//! the agent stays put and the step counts as a collision.

mod harness;
mod reward;
mod simulator;

pub use harness::{
    evaluate, read_results_csv, run_episode, write_results_csv, write_trajectory, EpisodeOutcome, EpisodeRun,
    TrajectoryRecord,
};
pub use reward::{compute_reward, RewardParams, RewardTerms, StepContext};
pub use simulator::{classify_termination, try_forward, SceneAssets, SimState, Simulator, StepOutcome};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::navmesh::{Embodiment, NavError};

pub const MAX_STEPS_SIM: u32 = 1000;
pub const MAX_STEPS_REAL: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Action {
    MoveForward,
    TurnLeft,
    TurnRight,
    Stop,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::MoveForward, Action::TurnLeft, Action::TurnRight, Action::Stop];

    pub fn as_str(self) -> &'static str {
        match self {
            Action::MoveForward => "MOVE_FORWARD",
            Action::TurnLeft => "TURN_LEFT",
            Action::TurnRight => "TURN_RIGHT",
            Action::Stop => "STOP",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Action::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown action `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TerminationReason {
    TargetReached,
    EarlyStopGoalVisible,
    EarlyStopGoalNotVisible,
    MaxStepsReached,
}

impl TerminationReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationReason::TargetReached => "TARGET_REACHED",
            TerminationReason::EarlyStopGoalVisible => "EARLY_STOP_GOAL_VISIBLE",
            TerminationReason::EarlyStopGoalNotVisible => "EARLY_STOP_GOAL_NOT_VISIBLE",
            TerminationReason::MaxStepsReached => "MAX_STEPS_REACHED",
        }
    }
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TerminationReason {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            TerminationReason::TargetReached,
            TerminationReason::EarlyStopGoalVisible,
            TerminationReason::EarlyStopGoalNotVisible,
            TerminationReason::MaxStepsReached,
        ]
        .into_iter()
        .find(|t| t.as_str() == s)
        .ok_or_else(|| format!("unknown termination reason `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub episode_id: u64,
    pub success: bool,
    pub steps: u32,
    /// Final geodesic distance to the goal, meters.
    pub distance_to_goal: f64,
    pub termination: TerminationReason,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub embodiment: Embodiment,
    pub reward: RewardParams,
    pub max_steps: u32,
    pub background: [u8; 3],
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            embodiment: Embodiment::default(),
            reward: RewardParams::default(),
            max_steps: MAX_STEPS_SIM,
            background: [0, 0, 0],
        }
    }
}

impl SimConfig {
    /// The shorter step budget used for physical-robot runs.
    pub fn real_protocol() -> Self {
        Self {
            max_steps: MAX_STEPS_REAL,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.embodiment.validate()?;
        self.reward.validate()?;
        if self.max_steps == 0 {
            return Err("max_steps must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("episode {episode} belongs to scene `{episode_scene}`, not `{scene}`")]
    SceneMismatch {
        episode: u64,
        episode_scene: String,
        scene: String,
    },
    #[error("episode {0}: {1}")]
    InvalidEpisode(u64, String),
    #[error("step called after the episode finished")]
    EpisodeDone,
    #[error(transparent)]
    Nav(#[from] NavError),
    #[error("policy failed: {0}")]
    Policy(String),
    #[error("results file: {0}")]
    Results(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
