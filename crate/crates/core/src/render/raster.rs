use super::{Frame, Intrinsics, Pose};
use crate::geom::Vec3;
use crate::mesh::Mesh;

pub const NEAR_PLANE: f64 = 0.05;
pub const FAR_PLANE: f64 = 100.0;

#[derive(Clone, Copy)]
struct CamVertex {
    p: Vec3,
    color: [f64; 3],
}

#[derive(Clone, Copy)]
struct ScreenVertex {
    x: f64,
    y: f64,
    inv_z: f64,
    color_over_z: [f64; 3],
}

fn edge(a: &ScreenVertex, b: &ScreenVertex, px: f64, py: f64) -> f64 {
    (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x)
}

/// Top-left ownership for an edge of a positively oriented triangle
/// (y grows downwards).
fn owns(a: &ScreenVertex, b: &ScreenVertex) -> bool {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    dy < 0.0 || (dy == 0.0 && dx > 0.0)
}

fn clip_near(tri: [CamVertex; 3]) -> Vec<CamVertex> {
    let mut out = Vec::with_capacity(4);
    for i in 0..3 {
        let a = tri[i];
        let b = tri[(i + 1) % 3];
        let a_in = a.p.z >= NEAR_PLANE;
        let b_in = b.p.z >= NEAR_PLANE;
        if a_in {
            out.push(a);
        }
        if a_in != b_in {
            let t = (NEAR_PLANE - a.p.z) / (b.p.z - a.p.z);
            let color: [f64; 3] = std::array::from_fn(|k| a.color[k] + t * (b.color[k] - a.color[k]));
            let mut p = a.p + (b.p - a.p) * t;
            p.z = NEAR_PLANE;
            out.push(CamVertex { p, color });
        }
    }
    out
}

struct Target<'a> {
    k: &'a Intrinsics,
    zbuf: Vec<f64>,
    rgb: Vec<f64>,
}

impl Target<'_> {
    fn project(&self, v: &CamVertex) -> ScreenVertex {
        let inv_z = 1.0 / v.p.z;
        ScreenVertex {
            x: self.k.cx + self.k.fx * v.p.x * inv_z,
            y: self.k.cy - self.k.fy * v.p.y * inv_z,
            inv_z,
            color_over_z: v.color.map(|c| c * inv_z),
        }
    }

    fn raster(&mut self, v0: ScreenVertex, mut v1: ScreenVertex, mut v2: ScreenVertex) {
        let mut area = edge(&v0, &v1, v2.x, v2.y);
        if !area.is_finite() || area == 0.0 {
            return;
        }
        if area < 0.0 {
            std::mem::swap(&mut v1, &mut v2);
            area = -area;
        }
        let (w, h) = (self.k.width as i64, self.k.height as i64);
        let min_x = v0.x.min(v1.x).min(v2.x);
        let max_x = v0.x.max(v1.x).max(v2.x);
        let min_y = v0.y.min(v1.y).min(v2.y);
        let max_y = v0.y.max(v1.y).max(v2.y);
        let i0 = ((min_x - 0.5).ceil() as i64).max(0);
        let i1 = ((max_x - 0.5).floor() as i64).min(w - 1);
        let j0 = ((min_y - 0.5).ceil() as i64).max(0);
        let j1 = ((max_y - 0.5).floor() as i64).min(h - 1);
        if i0 > i1 || j0 > j1 {
            return;
        }
        let own = [owns(&v1, &v2), owns(&v2, &v0), owns(&v0, &v1)];
        for j in j0..=j1 {
            let py = j as f64 + 0.5;
            for i in i0..=i1 {
                let px = i as f64 + 0.5;
                let e = [edge(&v1, &v2, px, py), edge(&v2, &v0, px, py), edge(&v0, &v1, px, py)];
                if (0..3).any(|k| e[k] < 0.0 || (e[k] == 0.0 && !own[k])) {
                    continue;
                }
                let l = e.map(|x| x / area);
                let inv_z = l[0] * v0.inv_z + l[1] * v1.inv_z + l[2] * v2.inv_z;
                let z = 1.0 / inv_z;
                if z.is_nan() || z > FAR_PLANE {
                    continue;
                }
                let idx = (j * w + i) as usize;
                if z >= self.zbuf[idx] {
                    continue;
                }
                self.zbuf[idx] = z;
                for c in 0..3 {
                    let v = l[0] * v0.color_over_z[c] + l[1] * v1.color_over_z[c] + l[2] * v2.color_over_z[c];
                    self.rgb[3 * idx + c] = v * z;
                }
            }
        }
    }
}

/// Z-buffered rasterization of a Y-up mesh with per-vertex colors. Both
/// triangle faces are drawn.
pub fn render_frame(mesh: &Mesh, pose: &Pose, k: &Intrinsics, background: [u8; 3]) -> Frame {
    let n = k.width as usize * k.height as usize;
    let mut target = Target {
        k,
        zbuf: vec![f64::INFINITY; n],
        rgb: vec![0.0; 3 * n],
    };
    let cam: Vec<Vec3> = mesh.vertices().iter().map(|p| pose.to_camera(p)).collect();
    for tri in mesh.triangles() {
        let verts = tri.map(|i| CamVertex {
            p: cam[i as usize],
            color: mesh.color(i as usize).map(|c| c as f64),
        });
        if verts.iter().all(|v| v.p.z < NEAR_PLANE) || verts.iter().all(|v| v.p.z > FAR_PLANE) {
            continue;
        }
        let poly = clip_near(verts);
        if poly.len() < 3 {
            continue;
        }
        let screen: Vec<ScreenVertex> = poly.iter().map(|v| target.project(v)).collect();
        for i in 1..screen.len() - 1 {
            target.raster(screen[0], screen[i], screen[i + 1]);
        }
    }
    let mut frame = Frame::filled(k.width, k.height, background);
    for (idx, &z) in target.zbuf.iter().enumerate() {
        if z.is_finite() {
            frame.depth[idx] = z as f32;
            for c in 0..3 {
                frame.rgb[3 * idx + c] = target.rgb[3 * idx + c].round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    frame
}
