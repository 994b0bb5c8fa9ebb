use std::path::{Path, PathBuf};

use navbench::episodes::Split;
use navbench::navmesh::{Embodiment, DEFAULT_CELL_SIZE, MAX_CELL_SIZE, MIN_CELL_SIZE};
use navbench::sim::{RewardParams, SimConfig, MAX_STEPS_SIM};
use navbench::metrics::DEFAULT_TAU;
use navbench::UpAxis;
use serde::Deserialize;

use crate::UsageError;

pub const CONFIG_ENV: &str = "NAVBENCH_CONFIG";

/// Everything a run can be configured with. Defaults reproduce the
/// reference setup; flags given on the command line win over the file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub embodiment: Embodiment,
    pub reward: RewardParams,
    pub navmesh: NavmeshSection,
    pub episodes: EpisodesSection,
    pub sim: SimSection,
    pub protocol: ProtocolSection,
    pub recon: ReconSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NavmeshSection {
    pub cell_size: f64,
    /// Up axis assumed for input scenes.
    pub up_axis: UpAxis,
}

impl Default for NavmeshSection {
    fn default() -> Self {
        Self {
            cell_size: DEFAULT_CELL_SIZE,
            up_axis: UpAxis::ZUp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodesSection {
    pub n: usize,
    pub seed: u64,
    pub split: Split,
}

impl Default for EpisodesSection {
    fn default() -> Self {
        Self {
            n: 1000,
            seed: 0,
            split: Split::Val,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub max_steps: u32,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            max_steps: MAX_STEPS_SIM,
            seed: 0,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    pub timeout_secs: f64,
    pub addr: String,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            timeout_secs: 30.0,
            addr: "127.0.0.1:8008".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconSection {
    pub tau: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for ReconSection {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            samples: 200_000,
            seed: 0,
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, UsageError> {
        let cfg: Config = toml::from_str(text).map_err(|e| UsageError(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `explicit`, else the file named by `NAVBENCH_CONFIG`, else
    /// returns the defaults.
    pub fn load(explicit: Option<&Path>) -> Result<Self, UsageError> {
        let path = match explicit {
            Some(p) => Some(p.to_path_buf()),
            None => std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from),
        };
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(&path).map_err(|e| UsageError(format!("config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| UsageError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn validate(&self) -> Result<(), UsageError> {
        let bad = |m: String| Err(UsageError(format!("config: {m}")));
        if let Err(m) = self.embodiment.validate() {
            return bad(m);
        }
        if let Err(m) = self.reward.validate() {
            return bad(m);
        }
        if !(MIN_CELL_SIZE..=MAX_CELL_SIZE).contains(&self.navmesh.cell_size) {
            return bad(format!(
                "navmesh.cell_size must lie in [{MIN_CELL_SIZE}, {MAX_CELL_SIZE}], got {}",
                self.navmesh.cell_size
            ));
        }
        if self.episodes.n == 0 {
            return bad("episodes.n must be at least 1".into());
        }
        if self.sim.max_steps == 0 {
            return bad("sim.max_steps must be at least 1".into());
        }
        if self.sim.jobs == 0 {
            return bad("sim.jobs must be at least 1".into());
        }
        if !(self.protocol.timeout_secs.is_finite() && self.protocol.timeout_secs > 0.0) {
            return bad(format!("protocol.timeout_secs must be positive, got {}", self.protocol.timeout_secs));
        }
        if !(self.recon.tau.is_finite() && self.recon.tau > 0.0) {
            return bad(format!("recon.tau must be positive, got {}", self.recon.tau));
        }
        if self.recon.samples == 0 {
            return bad("recon.samples must be at least 1".into());
        }
        Ok(())
    }

    pub fn sim_config(&self, max_steps: Option<u32>) -> SimConfig {
        SimConfig {
            embodiment: self.embodiment.clone(),
            reward: self.reward.clone(),
            max_steps: max_steps.unwrap_or(self.sim.max_steps),
            ..SimConfig::default()
        }
    }
}
