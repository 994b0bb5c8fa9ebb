//! Procedural Y-up scenes used by tests, benchmarks, and the CLI's demo
//! commands. Floors sit at `y = 0` and span `[0, width] x [0, depth]` in
//! the XZ plane.

use crate::geom::Vec3;
use crate::mesh::{Mesh, UpAxis};

const FLOOR: [u8; 3] = [150, 120, 90];
const WALL_COLORS: [[u8; 3]; 4] = [[200, 60, 60], [60, 180, 70], [70, 90, 210], [220, 200, 80]];
const PARTITION: [u8; 3] = [180, 180, 180];
const CEILING: [u8; 3] = [90, 90, 90];

/// Parallelogram `corner + s*u + t*v`, `s, t` in `[0, 1]`, as two triangles.
pub fn quad(corner: Vec3, u: Vec3, v: Vec3, color: [u8; 3]) -> Mesh {
    let normal = u.cross(&v).normalize();
    Mesh::new(
        vec![corner, corner + u, corner + u + v, corner + v],
        Some(vec![color; 4]),
        Some(vec![normal; 4]),
        vec![[0, 1, 2], [0, 2, 3]],
        UpAxis::YUp,
    )
    .expect("quad is valid")
}

/// Closed axis-aligned box.
pub fn cuboid(min: Vec3, max: Vec3, color: [u8; 3]) -> Mesh {
    let e = max - min;
    let (x, y, z) = (Vec3::x() * e.x, Vec3::y() * e.y, Vec3::z() * e.z);
    Mesh::merge(&[
        quad(min, z, x, color),
        quad(min + y, x, z, color),
        quad(min, x, y, color),
        quad(min + z, y, x, color),
        quad(min, y, z, color),
        quad(min + x, z, y, color),
    ])
    .expect("box is valid")
}

fn floor(width: f64, depth: f64) -> Mesh {
    quad(Vec3::zeros(), Vec3::z() * depth, Vec3::x() * width, FLOOR)
}

fn outer_walls(width: f64, depth: f64, height: f64) -> Vec<Mesh> {
    let up = Vec3::y() * height;
    vec![
        quad(Vec3::zeros(), Vec3::x() * width, up, WALL_COLORS[0]),
        quad(Vec3::new(0.0, 0.0, depth), up, Vec3::x() * width, WALL_COLORS[1]),
        quad(Vec3::zeros(), up, Vec3::z() * depth, WALL_COLORS[2]),
        quad(Vec3::new(width, 0.0, 0.0), Vec3::z() * depth, up, WALL_COLORS[3]),
    ]
}

/// Flat floor without walls.
pub fn floor_only(width: f64, depth: f64) -> Mesh {
    floor(width, depth)
}

/// Empty rectangular room: floor plus four thin walls.
pub fn room_box(width: f64, depth: f64, wall_height: f64) -> Mesh {
    let mut parts = vec![floor(width, depth)];
    parts.extend(outer_walls(width, depth, wall_height));
    Mesh::merge(&parts).expect("room is valid")
}

/// Room divided at `x = wall_x` by a full-height partition. When `door`
/// is `Some((z0, z1))`, the partition has an opening spanning `z0..z1`.
pub fn two_rooms(width: f64, depth: f64, wall_height: f64, wall_x: f64, door: Option<(f64, f64)>) -> Mesh {
    let mut parts = vec![floor(width, depth)];
    parts.extend(outer_walls(width, depth, wall_height));
    let up = Vec3::y() * wall_height;
    let base = Vec3::new(wall_x, 0.0, 0.0);
    match door {
        None => parts.push(quad(base, up, Vec3::z() * depth, PARTITION)),
        Some((z0, z1)) => {
            parts.push(quad(base, up, Vec3::z() * z0, PARTITION));
            parts.push(quad(base + Vec3::z() * z1, up, Vec3::z() * (depth - z1), PARTITION));
        }
    }
    Mesh::merge(&parts).expect("rooms are valid")
}

/// The standard two-room fixture: 10 x 6 m, partition at x = 5 m with a
/// 1.2 m doorway.
pub fn two_room_fixture() -> Mesh {
    two_rooms(10.0, 6.0, 2.5, 5.0, Some((2.4, 3.6)))
}

/// Room with a ceiling at `ceiling_y` over the half `x < width / 2`.
pub fn low_ceiling_room(width: f64, depth: f64, wall_height: f64, ceiling_y: f64) -> Mesh {
    let mut parts = vec![floor(width, depth)];
    parts.extend(outer_walls(width, depth, wall_height));
    parts.push(quad(
        Vec3::new(0.0, ceiling_y, 0.0),
        Vec3::x() * (width / 2.0),
        Vec3::z() * depth,
        CEILING,
    ));
    Mesh::merge(&parts).expect("room is valid")
}

/// Straight corridor along +X, `length` by `width`, walls both sides.
pub fn corridor(length: f64, width: f64, wall_height: f64) -> Mesh {
    room_box(length, width, wall_height)
}

/// A room with a few boxes standing in it (occluders for visibility and
/// rendering tests).
pub fn furnished_room() -> Mesh {
    let mut parts = vec![room_box(8.0, 6.0, 2.5)];
    parts.push(cuboid(Vec3::new(2.0, 0.0, 1.0), Vec3::new(3.0, 0.8, 2.2), [120, 40, 160]));
    parts.push(cuboid(Vec3::new(5.1, 0.0, 3.3), Vec3::new(5.9, 2.0, 4.7), [30, 160, 160]));
    parts.push(cuboid(Vec3::new(1.3, 0.0, 4.1), Vec3::new(2.7, 1.1, 4.9), [200, 120, 20]));
    Mesh::merge(&parts).expect("room is valid")
}
