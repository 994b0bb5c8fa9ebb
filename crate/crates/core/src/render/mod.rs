//! Software rasterizer for RGB and depth observations.
//!
//! Camera convention: Y-up world, yaw 0 looks down -Z, no pitch or roll.
//! Pixel `(i, j)` has its center at `(i + 0.5, j + 0.5)` with `j` growing
//! downwards.

mod frame;
mod raster;

pub use frame::{psnr, Frame, RenderError};
pub use raster::{render_frame, FAR_PLANE, NEAR_PLANE};

use serde::{Deserialize, Serialize};

use crate::geom::{heading, Vec3};
use crate::navmesh::Embodiment;

/// Pinhole intrinsics with square pixels and a centered principal point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Intrinsics {
    pub fn from_hfov(hfov: f64, width: u32, height: u32) -> Self {
        let fx = (width as f64 / 2.0) / (hfov / 2.0).tan();
        Self {
            fx,
            fy: fx,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
        }
    }

    /// Vertical field of view in radians.
    pub fn vfov(&self) -> f64 {
        2.0 * (self.cy / self.fy).atan()
    }

    pub fn hfov(&self) -> f64 {
        2.0 * (self.cx / self.fx).atan()
    }

    /// Same field of view at a different resolution.
    pub fn resized(&self, width: u32, height: u32) -> Self {
        let s = width as f64 / self.width as f64;
        Self {
            fx: self.fx * s,
            fy: self.fy * s,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
        }
    }

    /// Unit world-space ray through the center of pixel `(i, j)`.
    pub fn pixel_ray(&self, pose: &Pose, i: u32, j: u32) -> Vec3 {
        let (r, u, f) = pose.basis();
        let x = (i as f64 + 0.5 - self.cx) / self.fx;
        let y = (self.cy - (j as f64 + 0.5)) / self.fy;
        (r * x + u * y + f).normalize()
    }
}

pub fn camera_intrinsics(embodiment: &Embodiment) -> Intrinsics {
    Intrinsics::from_hfov(embodiment.hfov(), embodiment.image_width, embodiment.image_height)
}

/// Camera eye position and yaw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub yaw: f64,
}

impl Pose {
    pub fn new(position: Vec3, yaw: f64) -> Self {
        Self { position, yaw }
    }

    /// Camera pose of an agent standing at `floor_point`.
    pub fn from_agent(floor_point: Vec3, yaw: f64, embodiment: &Embodiment) -> Self {
        Self {
            position: floor_point + Vec3::new(0.0, embodiment.camera_height, 0.0),
            yaw,
        }
    }

    /// (right, up, forward) unit vectors.
    pub fn basis(&self) -> (Vec3, Vec3, Vec3) {
        let f = heading(self.yaw);
        let r = Vec3::new(self.yaw.cos(), 0.0, -self.yaw.sin());
        (r, Vec3::y(), f)
    }

    /// World point to camera space: x right, y up, z forward (depth).
    pub fn to_camera(&self, p: &Vec3) -> Vec3 {
        let (r, u, f) = self.basis();
        let d = p - self.position;
        Vec3::new(d.dot(&r), d.dot(&u), d.dot(&f))
    }
}
