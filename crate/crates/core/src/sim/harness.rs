use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Action, EpisodeResult, SimConfig, SimError, Simulator, SceneAssets, TerminationReason};
use crate::episodes::Episode;
use crate::protocol::{Observation, Policy};
use crate::sim::RewardParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub step: u32,
    pub action: Action,
    pub position: [f64; 3],
    pub yaw: f64,
    pub reward: f64,
    pub collided: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRun {
    pub result: EpisodeResult,
    pub actions: Vec<Action>,
    pub trajectory: Vec<TrajectoryRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EpisodeOutcome {
    Completed(EpisodeRun),
    /// The episode could not be set up or the policy failed mid-episode.
    /// Excluded from success rates.
    Aborted { episode_id: u64, error: String },
}

impl EpisodeOutcome {
    pub fn episode_id(&self) -> u64 {
        match self {
            EpisodeOutcome::Completed(run) => run.result.episode_id,
            EpisodeOutcome::Aborted { episode_id, .. } => *episode_id,
        }
    }

    pub fn result(&self) -> Option<&EpisodeResult> {
        match self {
            EpisodeOutcome::Completed(run) => Some(&run.result),
            EpisodeOutcome::Aborted { .. } => None,
        }
    }
}

/// Runs one episode to completion: goal frame to the policy, then
/// observe/act/step until STOP or the step budget runs out.
pub fn run_episode(scene: &SceneAssets, episode: &Episode, policy: &mut dyn Policy, config: &SimConfig) -> Result<EpisodeRun, SimError> {
    let mut sim = Simulator::new(scene, episode, config)?;
    sim.reset();
    let goal = sim.goal_frame();
    policy
        .reset(&goal, episode.episode_id)
        .map_err(|e| SimError::Policy(e.to_string()))?;
    let needs_obs = policy.needs_observations();
    let mut actions = Vec::new();
    let mut trajectory = Vec::new();
    while !sim.done() {
        let frame = needs_obs.then(|| sim.observation());
        let obs = Observation {
            rgb: frame.as_ref(),
            collided: sim.state().collided_last,
        };
        let action = policy.act(&obs).map_err(|e| SimError::Policy(e.to_string()))?;
        let out = sim.step(action)?;
        let s = sim.state();
        actions.push(action);
        trajectory.push(TrajectoryRecord {
            step: out.steps,
            action,
            position: [s.position.x, s.position.y, s.position.z],
            yaw: s.yaw,
            reward: out.reward,
            collided: out.collided,
        });
    }
    Ok(EpisodeRun {
        result: sim.result(),
        actions,
        trajectory,
    })
}

/// Runs episodes in order with one policy, turning failures into
/// [`EpisodeOutcome::Aborted`].
pub fn evaluate(scene: &SceneAssets, episodes: &[Episode], policy: &mut dyn Policy, config: &SimConfig) -> Vec<EpisodeOutcome> {
    episodes
        .iter()
        .map(|ep| match run_episode(scene, ep, policy, config) {
            Ok(run) => EpisodeOutcome::Completed(run),
            Err(e) => {
                log::warn!("episode {} aborted: {e}", ep.episode_id);
                EpisodeOutcome::Aborted {
                    episode_id: ep.episode_id,
                    error: e.to_string(),
                }
            }
        })
        .collect()
}

/// One JSON object per line.
pub fn write_trajectory<W: Write>(mut w: W, records: &[TrajectoryRecord]) -> Result<(), SimError> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| SimError::Results(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

const ABORTED: &str = "ABORTED";

#[derive(Debug, Serialize, Deserialize)]
struct ResultRow {
    episode_id: u64,
    success: bool,
    steps: Option<u32>,
    dist_to_goal_m: Option<f64>,
    termination: String,
    reward: Option<f64>,
}

/// Results table. Aborted episodes appear with termination `ABORTED` and
/// empty numeric fields. Non-default reward constants are recorded in a
/// leading `#` comment.
pub fn write_results_csv<W: Write>(mut w: W, outcomes: &[EpisodeOutcome], reward: &RewardParams) -> Result<(), SimError> {
    let overrides = reward.overrides();
    if !overrides.is_empty() {
        writeln!(w, "# reward overrides: {}", overrides.join(" "))?;
    }
    let mut out = csv::Writer::from_writer(w);
    for o in outcomes {
        let row = match o {
            EpisodeOutcome::Completed(run) => {
                let r = &run.result;
                ResultRow {
                    episode_id: r.episode_id,
                    success: r.success,
                    steps: Some(r.steps),
                    dist_to_goal_m: Some(r.distance_to_goal),
                    termination: r.termination.to_string(),
                    reward: Some(r.reward),
                }
            }
            EpisodeOutcome::Aborted { episode_id, .. } => ResultRow {
                episode_id: *episode_id,
                success: false,
                steps: None,
                dist_to_goal_m: None,
                termination: ABORTED.into(),
                reward: None,
            },
        };
        out.serialize(row).map_err(|e| SimError::Results(e.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a results table back: completed results and the ids of aborted
/// episodes.
pub fn read_results_csv<R: Read>(r: R) -> Result<(Vec<EpisodeResult>, Vec<u64>), SimError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let mut results = Vec::new();
    let mut aborted = Vec::new();
    for (i, row) in rdr.deserialize::<ResultRow>().enumerate() {
        let row = row.map_err(|e| SimError::Results(format!("row {}: {e}", i + 1)))?;
        if row.termination == ABORTED {
            aborted.push(row.episode_id);
            continue;
        }
        let missing = |f: &str| SimError::Results(format!("row {}: missing {f}", i + 1));
        results.push(EpisodeResult {
            episode_id: row.episode_id,
            success: row.success,
            steps: row.steps.ok_or_else(|| missing("steps"))?,
            distance_to_goal: row.dist_to_goal_m.ok_or_else(|| missing("dist_to_goal_m"))?,
            termination: row
                .termination
                .parse::<TerminationReason>()
                .map_err(|e| SimError::Results(format!("row {}: {e}", i + 1)))?,
            reward: row.reward.ok_or_else(|| missing("reward"))?,
        });
    }
    Ok((results, aborted))
}
