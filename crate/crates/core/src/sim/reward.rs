use serde::{Deserialize, Serialize};

use super::Action;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardParams {
    /// Success bonus.
    pub c_s: f64,
    /// Angle-success bonus.
    pub c_a: f64,
    /// Success radius, meters.
    pub r_g: f64,
    /// Angle-success threshold, degrees.
    pub theta_g_deg: f64,
    /// Per-step slack penalty.
    pub slack: f64,
    /// Collision penalty.
    pub c_coll: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            c_s: 5.0,
            c_a: 5.0,
            r_g: 1.0,
            theta_g_deg: 25.0,
            slack: 0.01,
            c_coll: 0.03,
        }
    }
}

impl RewardParams {
    pub fn theta_g(&self) -> f64 {
        self.theta_g_deg.to_radians()
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("c_s", self.c_s),
            ("c_a", self.c_a),
            ("r_g", self.r_g),
            ("theta_g_deg", self.theta_g_deg),
            ("slack", self.slack),
            ("c_coll", self.c_coll),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("reward.{name} must be non-negative, got {v}"));
            }
        }
        Ok(())
    }

    /// `name=value` pairs that differ from the defaults.
    pub fn overrides(&self) -> Vec<String> {
        let d = Self::default();
        [
            ("c_s", self.c_s, d.c_s),
            ("c_a", self.c_a, d.c_a),
            ("r_g", self.r_g, d.r_g),
            ("theta_g_deg", self.theta_g_deg, d.theta_g_deg),
            ("slack", self.slack, d.slack),
            ("c_coll", self.c_coll, d.c_coll),
        ]
        .into_iter()
        .filter(|(_, v, dv)| v != dv)
        .map(|(n, v, _)| format!("{n}={v}"))
        .collect()
    }
}

/// Inputs to one reward evaluation. `theta_*` are radians in `[0, pi]`;
/// `theta_hat_*` are the gated angle values (zero outside the success radius).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepContext {
    pub d_prev: f64,
    pub d_cur: f64,
    pub theta_cur: f64,
    pub theta_hat_prev: f64,
    pub theta_hat_cur: f64,
    pub action: Action,
    pub collided: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardTerms {
    pub success: f64,
    pub angle: f64,
    pub angle_shaping: f64,
    pub distance_shaping: f64,
    pub slack: f64,
    pub collision: f64,
}

impl RewardTerms {
    pub fn total(&self) -> f64 {
        self.success + self.angle + self.angle_shaping + self.distance_shaping + self.slack + self.collision
    }
}

pub fn compute_reward(ctx: &StepContext, params: &RewardParams) -> RewardTerms {
    let stop = ctx.action == Action::Stop;
    RewardTerms {
        success: if stop && ctx.d_cur < params.r_g { params.c_s } else { 0.0 },
        angle: if stop && ctx.theta_cur < params.theta_g() { params.c_a } else { 0.0 },
        angle_shaping: ctx.theta_hat_prev - ctx.theta_hat_cur,
        distance_shaping: ctx.d_prev - ctx.d_cur,
        slack: -params.slack,
        collision: if ctx.collided { -params.c_coll } else { 0.0 },
    }
}
