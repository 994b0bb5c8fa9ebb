use serde::{Deserialize, Serialize};

/// Physical parameters of the cylinder agent and its camera.
///
/// Defaults describe the Stretch robot setup: a 1.41 m tall, 0.3 m radius
/// cylinder with a 640x480 camera at 1.31 m and a 42 degree horizontal
/// field of view. Forward step and turn angle follow the usual ImageNav
/// discretization (0.25 m, 30 degrees).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Embodiment {
    pub height: f64,
    pub radius: f64,
    pub camera_height: f64,
    pub hfov_deg: f64,
    pub image_width: u32,
    pub image_height: u32,
    pub forward_step: f64,
    pub turn_angle_deg: f64,
    pub success_radius: f64,
    pub angle_success_deg: f64,
}

impl Default for Embodiment {
    fn default() -> Self {
        Self {
            height: 1.41,
            radius: 0.3,
            camera_height: 1.31,
            hfov_deg: 42.0,
            image_width: 640,
            image_height: 480,
            forward_step: 0.25,
            turn_angle_deg: 30.0,
            success_radius: 1.0,
            angle_success_deg: 25.0,
        }
    }
}

impl Embodiment {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("height", self.height),
            ("radius", self.radius),
            ("camera_height", self.camera_height),
            ("hfov_deg", self.hfov_deg),
            ("forward_step", self.forward_step),
            ("turn_angle_deg", self.turn_angle_deg),
            ("success_radius", self.success_radius),
            ("angle_success_deg", self.angle_success_deg),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("embodiment.{name} must be positive, got {v}"));
            }
        }
        if self.image_width == 0 || self.image_height == 0 {
            return Err("embodiment image dimensions must be positive".into());
        }
        if self.hfov_deg >= 180.0 {
            return Err(format!("embodiment.hfov_deg must be below 180, got {}", self.hfov_deg));
        }
        if self.camera_height >= self.height {
            return Err(format!(
                "embodiment.camera_height ({}) must be below height ({})",
                self.camera_height, self.height
            ));
        }
        Ok(())
    }

    pub fn turn_angle(&self) -> f64 {
        self.turn_angle_deg.to_radians()
    }

    pub fn hfov(&self) -> f64 {
        self.hfov_deg.to_radians()
    }
}
