//! Small geometric vocabulary shared by every module.

use serde::{Deserialize, Serialize};

/// World-space vector in meters.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    /// An inverted box that any `grow` call will overwrite.
    pub fn empty() -> Self {
        Self {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn from_point(p: Vec3) -> Self {
        Self { min: p, max: p }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    pub fn grow(&mut self, p: Vec3) {
        self.min = self.min.inf(&p);
        self.max = self.max.sup(&p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn contains(&self, other: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= other.min[k] && self.max[k] >= other.max[k])
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    /// Index of the longest axis.
    pub fn longest_axis(&self) -> usize {
        let e = self.extent();
        if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        }
    }

    /// Slab test. Returns the entry distance when the ray overlaps the box
    /// within `[t_min, t_max]`.
    pub fn ray_entry(&self, origin: &Vec3, inv_dir: &Vec3, t_min: f64, t_max: f64) -> Option<f64> {
        let mut lo = t_min;
        let mut hi = t_max;
        for k in 0..3 {
            let t0 = (self.min[k] - origin[k]) * inv_dir[k];
            let t1 = (self.max[k] - origin[k]) * inv_dir[k];
            let (near, far) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            // NaN arises for a zero direction component with the origin on a
            // slab plane; treat it as "inside" that slab.
            if !near.is_nan() {
                lo = lo.max(near);
            }
            if !far.is_nan() {
                hi = hi.min(far);
            }
            if lo > hi {
                return None;
            }
        }
        Some(lo)
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

/// Unit horizontal heading for a yaw angle. Yaw 0 looks down -Z and
/// positive yaw turns counter-clockwise seen from +Y (to the left).
pub fn heading(yaw: f64) -> Vec3 {
    Vec3::new(-yaw.sin(), 0.0, -yaw.cos())
}

/// Yaw whose heading points along the horizontal direction `(dx, dz)`.
pub fn yaw_towards(dx: f64, dz: f64) -> f64 {
    (-dx).atan2(-dz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), -PI);
        assert_eq!(wrap_angle(-PI), -PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        for i in -100..100 {
            let w = wrap_angle(i as f64 * 0.37);
            assert!((-PI..PI).contains(&w));
        }
    }

    #[test]
    fn heading_and_yaw_agree() {
        for i in 0..24 {
            let yaw = wrap_angle(i as f64 * PI / 12.0);
            let h = heading(yaw);
            assert!((wrap_angle(yaw_towards(h.x, h.z) - yaw)).abs() < 1e-12);
        }
        // positive yaw turns to the left (-X when looking down -Z)
        let left = heading(PI / 2.0);
        assert!((left.x + 1.0).abs() < 1e-12 && left.z.abs() < 1e-12);
    }

    #[test]
    fn slab_test() {
        let b = Aabb {
            min: Vec3::new(0.0, 0.0, 0.0),
            max: Vec3::new(1.0, 1.0, 1.0),
        };
        let o = Vec3::new(-1.0, 0.5, 0.5);
        let d = Vec3::new(1.0, 0.0, 0.0);
        let inv = d.map(|c| 1.0 / c);
        assert_eq!(b.ray_entry(&o, &inv, 0.0, 10.0), Some(1.0));
        assert_eq!(b.ray_entry(&o, &inv, 0.0, 0.5), None);
    }
}
