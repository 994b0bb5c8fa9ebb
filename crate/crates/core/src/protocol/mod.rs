//! Policy interface, baseline policies, and the HTTP wire protocol for
//! running a policy on another machine.
//!
//! Wire format (UTF-8 JSON over HTTP/1.1):
//!
//! ```text
//! GET  /health                                   -> {"status": "ok"}
//! POST /reset {"session", "goal", "episode_id"}  -> {"ok": true}
//! POST /step  {"session", "rgb", "collided"}     -> {"action": "MOVE_FORWARD"}
//! errors                                         -> {"error": "..."}
//! ```
//! `goal` and `rgb` are base64-encoded PNGs; `episode_id` is the decimal id
//! as a string.

mod client;
mod oracle;
mod server;

pub use client::{RemotePolicy, DEFAULT_TIMEOUT};
pub use oracle::{OraclePolicy, STOP_FRACTION};
pub use server::{PolicyFactory, PolicyServer};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::render::Frame;
use crate::sim::Action;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("act called before reset")]
    NotReset,
    #[error("unknown episode {0}")]
    UnknownEpisode(u64),
    #[error("unknown action `{0}` from server")]
    UnknownAction(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("server replied {status}: {message}")]
    Server { status: u16, message: String },
    #[error("{0}")]
    Failed(String),
}

/// What the policy sees each step. `rgb` is `None` for policies that
/// declare they do not need observations.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub rgb: Option<&'a Frame>,
    pub collided: bool,
}

pub trait Policy: Send {
    /// Starts an episode. Called exactly once per episode before `act`.
    fn reset(&mut self, goal: &Frame, episode_id: u64) -> Result<(), PolicyError>;

    fn act(&mut self, obs: &Observation<'_>) -> Result<Action, PolicyError>;

    /// Whether `act` reads `obs.rgb`. Lets the simulator skip rendering.
    fn needs_observations(&self) -> bool {
        true
    }
}

/// Uniform over the four actions. Each episode draws from its own stream, so
/// results do not depend on episode order.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    seed: u64,
    rng: Option<ChaCha8Rng>,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self { seed, rng: None }
    }
}

impl Policy for RandomPolicy {
    fn reset(&mut self, _goal: &Frame, episode_id: u64) -> Result<(), PolicyError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(episode_id);
        self.rng = Some(rng);
        Ok(())
    }

    fn act(&mut self, _obs: &Observation<'_>) -> Result<Action, PolicyError> {
        let rng = self.rng.as_mut().ok_or(PolicyError::NotReset)?;
        Ok(Action::ALL[rng.random_range(0..4)])
    }

    fn needs_observations(&self) -> bool {
        false
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ResetRequest {
    pub session: String,
    pub goal: String,
    pub episode_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StepRequest {
    pub session: String,
    pub rgb: String,
    pub collided: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StepResponse {
    pub action: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub error: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draw(p: &mut RandomPolicy, id: u64, n: usize) -> Vec<Action> {
        p.reset(&Frame::filled(1, 1, [0; 3]), id).unwrap();
        let obs = Observation { rgb: None, collided: false };
        (0..n).map(|_| p.act(&obs).unwrap()).collect()
    }

    #[test]
    fn random_is_seeded_per_episode() {
        let mut a = RandomPolicy::new(7);
        let mut b = RandomPolicy::new(7);
        let first = draw(&mut a, 3, 50);
        draw(&mut b, 1, 20);
        assert_eq!(draw(&mut b, 3, 50), first);
        assert_ne!(draw(&mut a, 4, 50), first);
        assert!(matches!(RandomPolicy::new(1).act(&Observation { rgb: None, collided: false }), Err(PolicyError::NotReset)));
    }

    #[test]
    fn random_histogram_is_uniform() {
        let n = 100_000;
        let mut counts = [0usize; 4];
        for a in draw(&mut RandomPolicy::new(11), 0, n) {
            counts[Action::ALL.iter().position(|&x| x == a).unwrap()] += 1;
        }
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 / 4.0).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }
}
