use thiserror::Error;

use crate::geom::{Aabb, Vec3};
use crate::mesh::Mesh;

/// Tolerance on barycentric coordinates in the ray/triangle test. Lets rays
/// through a shared edge hit one of the two triangles instead of slipping
/// through the crack.
pub const BARYCENTRIC_EPS: f64 = 1e-7;

/// Hits closer than this to the ray origin are ignored.
pub const MIN_HIT_DISTANCE: f64 = 1e-6;

/// Default end-point clearance for [`Bvh::line_of_sight`].
pub const DEFAULT_LOS_EPS: f64 = 0.05;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum SpatialError {
    #[error("ray direction must be unit length (|d| = {0})")]
    NonUnitDirection(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub t: f64,
    pub triangle: usize,
    pub point: Vec3,
}

/// Moller-Trumbore intersection with a small barycentric tolerance.
/// Returns the ray parameter `t` (which may be negative).
pub fn intersect_triangle(origin: &Vec3, dir: &Vec3, [a, b, c]: &[Vec3; 3]) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() <= 1e-12 * e1.norm() * e2.norm() {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - a;
    let u = s.dot(&p) * inv;
    if !(-BARYCENTRIC_EPS..=1.0 + BARYCENTRIC_EPS).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < -BARYCENTRIC_EPS || u + v > 1.0 + BARYCENTRIC_EPS {
        return None;
    }
    Some(e2.dot(&q) * inv)
}

/// Orders hits by distance, then triangle index, so that ties resolve the
/// same way regardless of traversal order.
fn closer(t: f64, tri: usize, best: &Option<(f64, usize)>) -> bool {
    match best {
        None => true,
        Some((bt, bi)) => t < *bt || (t == *bt && tri < *bi),
    }
}

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf { start: u32, count: u32 },
    Inner { left: u32, right: u32 },
}

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    kind: NodeKind,
}

/// Median-split bounding volume hierarchy over a mesh's triangles.
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<u32>,
    triangles: Vec<[Vec3; 3]>,
}

impl Bvh {
    pub fn build(mesh: &Mesh) -> Self {
        let triangles: Vec<[Vec3; 3]> = (0..mesh.triangle_count()).map(|t| mesh.triangle(t)).collect();
        let mut order: Vec<u32> = (0..triangles.len() as u32).collect();
        let boxes: Vec<Aabb> = triangles
            .iter()
            .map(|tri| {
                let mut b = Aabb::from_point(tri[0]);
                b.grow(tri[1]);
                b.grow(tri[2]);
                b
            })
            .collect();
        let mut nodes = Vec::with_capacity(2 * triangles.len() / LEAF_SIZE + 1);
        if !triangles.is_empty() {
            build_node(&mut nodes, &boxes, &mut order, 0);
        }
        Self {
            nodes,
            order,
            triangles,
        }
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::Leaf { .. }))
            .count()
    }

    pub fn bounds(&self) -> Option<Aabb> {
        self.nodes.first().map(|n| n.bounds)
    }

    pub fn triangle(&self, t: usize) -> &[Vec3; 3] {
        &self.triangles[t]
    }

    /// Checks the structural invariants: every triangle in exactly one leaf,
    /// no empty leaves, parents enclose children.
    pub fn validate(&self) -> Result<(), String> {
        let mut seen = vec![0u32; self.triangles.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            match node.kind {
                NodeKind::Leaf { start, count } => {
                    if count == 0 {
                        return Err(format!("node {i} is an empty leaf"));
                    }
                    for &t in &self.order[start as usize..(start + count) as usize] {
                        seen[t as usize] += 1;
                    }
                }
                NodeKind::Inner { left, right } => {
                    for c in [left, right] {
                        if !node.bounds.contains(&self.nodes[c as usize].bounds) {
                            return Err(format!("node {i} does not enclose child {c}"));
                        }
                    }
                }
            }
        }
        match seen.iter().position(|&c| c != 1) {
            Some(t) => Err(format!("triangle {t} appears in {} leaves", seen[t])),
            None => Ok(()),
        }
    }

    /// Nearest hit with `t` in `(MIN_HIT_DISTANCE, t_max]`.
    pub fn raycast(&self, origin: Vec3, direction: Vec3, t_max: f64) -> Result<Option<RayHit>, SpatialError> {
        let len = direction.norm();
        if (len - 1.0).abs() > 1e-6 {
            return Err(SpatialError::NonUnitDirection(len));
        }
        Ok(self.nearest_in_range(&origin, &direction, MIN_HIT_DISTANCE, t_max))
    }

    /// Nearest hit with `t` in `(t_min, t_max]`; `direction` need not be unit.
    pub fn nearest_in_range(&self, origin: &Vec3, direction: &Vec3, t_min: f64, t_max: f64) -> Option<RayHit> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv = direction.map(|c| 1.0 / c);
        let mut best: Option<(f64, usize)> = None;
        let mut stack: Vec<(u32, f64)> = Vec::with_capacity(64);
        if let Some(t0) = self.nodes[0].bounds.ray_entry(origin, &inv, t_min, t_max) {
            stack.push((0, t0));
        }
        while let Some((ni, entry)) = stack.pop() {
            if best.is_some_and(|(bt, _)| entry > bt) {
                continue;
            }
            let node = &self.nodes[ni as usize];
            match node.kind {
                NodeKind::Leaf { start, count } => {
                    for &t in &self.order[start as usize..(start + count) as usize] {
                        let t = t as usize;
                        if let Some(th) = intersect_triangle(origin, direction, &self.triangles[t]) {
                            if th > t_min && th <= t_max && closer(th, t, &best) {
                                best = Some((th, t));
                            }
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    let limit = best.map_or(t_max, |(bt, _)| bt.min(t_max));
                    let l = self.nodes[left as usize].bounds.ray_entry(origin, &inv, t_min, limit);
                    let r = self.nodes[right as usize].bounds.ray_entry(origin, &inv, t_min, limit);
                    match (l, r) {
                        (Some(tl), Some(tr)) => {
                            // nearer child on top
                            if tl <= tr {
                                stack.push((right, tr));
                                stack.push((left, tl));
                            } else {
                                stack.push((left, tl));
                                stack.push((right, tr));
                            }
                        }
                        (Some(tl), None) => stack.push((left, tl)),
                        (None, Some(tr)) => stack.push((right, tr)),
                        (None, None) => {}
                    }
                }
            }
        }
        best.map(|(t, triangle)| RayHit {
            t,
            triangle,
            point: origin + direction * t,
        })
    }

    /// Every hit with `t` in `(t_min, t_max]`, sorted by distance then index.
    pub fn hits_in_range(&self, origin: &Vec3, direction: &Vec3, t_min: f64, t_max: f64) -> Vec<RayHit> {
        let mut hits = Vec::new();
        if self.nodes.is_empty() {
            return hits;
        }
        let inv = direction.map(|c| 1.0 / c);
        let mut stack = vec![0u32];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if node.bounds.ray_entry(origin, &inv, t_min, t_max).is_none() {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { start, count } => {
                    for &t in &self.order[start as usize..(start + count) as usize] {
                        let t = t as usize;
                        if let Some(th) = intersect_triangle(origin, direction, &self.triangles[t]) {
                            if th > t_min && th <= t_max {
                                hits.push(RayHit {
                                    t: th,
                                    triangle: t,
                                    point: origin + direction * th,
                                });
                            }
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        hits.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.triangle.cmp(&b.triangle)));
        hits
    }

    /// True when nothing blocks the open segment from `a` to `b`, ignoring
    /// `eps` meters at each end.
    pub fn line_of_sight(&self, a: Vec3, b: Vec3, eps: f64) -> bool {
        let d = b - a;
        let len = d.norm();
        if len <= 2.0 * eps {
            return true;
        }
        let dir = d / len;
        self.nearest_in_range(&a, &dir, eps, len - eps).is_none()
    }
}

fn build_node(nodes: &mut Vec<Node>, boxes: &[Aabb], order: &mut [u32], start: usize) -> u32 {
    let mut bounds = Aabb::empty();
    let mut centroids = Aabb::empty();
    for &t in order.iter() {
        bounds = bounds.union(&boxes[t as usize]);
        centroids.grow(boxes[t as usize].center());
    }
    let index = nodes.len() as u32;
    if order.len() <= LEAF_SIZE {
        debug_assert!(!order.is_empty(), "empty leaf");
        nodes.push(Node {
            bounds,
            kind: NodeKind::Leaf {
                start: start as u32,
                count: order.len() as u32,
            },
        });
        return index;
    }
    nodes.push(Node {
        bounds,
        kind: NodeKind::Leaf { start: 0, count: 0 },
    });
    let axis = centroids.longest_axis();
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        let ca = boxes[a as usize].center()[axis];
        let cb = boxes[b as usize].center()[axis];
        ca.total_cmp(&cb).then(a.cmp(&b))
    });
    let (lo, hi) = order.split_at_mut(mid);
    let left = build_node(nodes, boxes, lo, start);
    let right = build_node(nodes, boxes, hi, start + mid);
    nodes[index as usize].kind = NodeKind::Inner { left, right };
    index
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(mesh: &Mesh, o: &Vec3, d: &Vec3, t_min: f64, t_max: f64) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for t in 0..mesh.triangle_count() {
            if let Some(th) = intersect_triangle(o, d, &mesh.triangle(t)) {
                if th > t_min && th <= t_max && closer(th, t, &best) {
                    best = Some((th, t));
                }
            }
        }
        best
    }

    fn unit_square_at_origin() -> Mesh {
        fixtures::quad(
            Vec3::new(-0.5, -0.5, 0.0),
            Vec3::x(),
            Vec3::y(),
            [255, 255, 255],
        )
    }

    fn random_soup(n: usize, seed: u64) -> Mesh {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut verts = Vec::new();
        let mut tris = Vec::new();
        for i in 0..n {
            let c = Vec3::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
            for _ in 0..3 {
                verts.push(c + Vec3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)));
            }
            let b = 3 * i as u32;
            tris.push([b, b + 1, b + 2]);
        }
        Mesh::new(verts, None, None, tris, crate::mesh::UpAxis::YUp).unwrap()
    }

    #[test]
    fn single_triangle_is_one_leaf() {
        let m = Mesh::new(vec![Vec3::zeros(), Vec3::x(), Vec3::y()], None, None, vec![[0, 1, 2]], crate::mesh::UpAxis::YUp).unwrap();
        let bvh = Bvh::build(&m);
        assert_eq!(bvh.node_count(), 1);
        assert_eq!(bvh.leaf_count(), 1);
        bvh.validate().unwrap();
    }

    #[test]
    fn perpendicular_hit_and_parallel_miss() {
        let bvh = Bvh::build(&unit_square_at_origin());
        let hit = bvh.raycast(Vec3::new(0.1, 0.2, 2.0), -Vec3::z(), 10.0).unwrap().unwrap();
        assert!((hit.t - 2.0).abs() < 1e-5);
        assert!((hit.point - Vec3::new(0.1, 0.2, 0.0)).norm() < 1e-5);
        assert!(bvh.raycast(Vec3::new(-2.0, 0.0, 0.0), Vec3::x(), 10.0).unwrap().is_none());
        assert!(bvh.raycast(Vec3::new(0.0, 0.0, 2.0), -Vec3::z(), 1.5).unwrap().is_none());
        assert!(matches!(
            bvh.raycast(Vec3::zeros(), Vec3::z() * 2.0, 1.0),
            Err(SpatialError::NonUnitDirection(_))
        ));
    }

    #[test]
    fn ray_through_shared_edge_hits() {
        let bvh = Bvh::build(&unit_square_at_origin());
        // The quad's diagonal runs through the origin.
        let hit = bvh.raycast(Vec3::new(0.0, 0.0, 1.0), -Vec3::z(), 5.0).unwrap();
        assert!(hit.is_some());
    }

    #[test]
    fn matches_brute_force_on_10k_triangles() {
        let mesh = random_soup(10_000, 11);
        let bvh = Bvh::build(&mesh);
        bvh.validate().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut hits = 0;
        for _ in 0..1000 {
            let o = Vec3::new(rng.random_range(-12.0..12.0), rng.random_range(-12.0..12.0), rng.random_range(-12.0..12.0));
            let d = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)).normalize();
            let got = bvh.raycast(o, d, 50.0).unwrap().map(|h| (h.t, h.triangle));
            let want = brute_force(&mesh, &o, &d, MIN_HIT_DISTANCE, 50.0);
            assert_eq!(got.map(|g| g.1), want.map(|w| w.1));
            if let (Some(g), Some(w)) = (got, want) {
                assert!((g.0 - w.0).abs() <= 1e-6);
                hits += 1;
            }
        }
        assert!(hits > 100, "too few hits ({hits}) to be a meaningful check");
    }

    #[test]
    fn hits_in_range_sorted_and_complete() {
        let mesh = random_soup(500, 5);
        let bvh = Bvh::build(&mesh);
        let o = Vec3::new(-12.0, 0.0, 0.0);
        let d = Vec3::x();
        let hits = bvh.hits_in_range(&o, &d, 0.0, 100.0);
        let mut want: Vec<usize> = (0..mesh.triangle_count())
            .filter(|&t| intersect_triangle(&o, &d, &mesh.triangle(t)).is_some_and(|th| th > 0.0))
            .collect();
        want.sort();
        let mut got: Vec<usize> = hits.iter().map(|h| h.triangle).collect();
        assert!(hits.windows(2).all(|w| w[0].t <= w[1].t));
        got.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn line_of_sight_cases() {
        let empty = Bvh::build(&Mesh::new(vec![], None, None, vec![], crate::mesh::UpAxis::YUp).unwrap());
        assert!(empty.line_of_sight(Vec3::zeros(), Vec3::x(), DEFAULT_LOS_EPS));

        // Partition at x = 5 with a doorway spanning z in [2.4, 3.6].
        let scene = fixtures::two_room_fixture();
        let bvh = Bvh::build(&scene);
        let a = Vec3::new(2.0, 1.3, 1.0);
        let b = Vec3::new(8.0, 1.3, 1.0);
        assert!(!bvh.line_of_sight(a, b, DEFAULT_LOS_EPS));
        // Through the doorway.
        let a = Vec3::new(2.0, 1.3, 3.0);
        let b = Vec3::new(8.0, 1.3, 3.1);
        assert!(bvh.line_of_sight(a, b, DEFAULT_LOS_EPS));
        assert!(brute_force(&scene, &a, &(b - a).normalize(), DEFAULT_LOS_EPS, (b - a).norm() - DEFAULT_LOS_EPS).is_none());
    }

    #[test]
    fn line_of_sight_is_symmetric() {
        let scene = fixtures::furnished_room();
        let bvh = Bvh::build(&scene);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..2000 {
            let a = Vec3::new(rng.random_range(0.1..7.9), rng.random_range(0.1..2.4), rng.random_range(0.1..5.9));
            let b = Vec3::new(rng.random_range(0.1..7.9), rng.random_range(0.1..2.4), rng.random_range(0.1..5.9));
            assert_eq!(bvh.line_of_sight(a, b, 0.05), bvh.line_of_sight(b, a, 0.05));
        }
    }
}
