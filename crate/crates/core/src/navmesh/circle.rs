use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: (f64, f64),
    pub radius: f64,
}

impl Circle {
    fn contains(&self, p: (f64, f64)) -> bool {
        let d = ((p.0 - self.center.0).powi(2) + (p.1 - self.center.1).powi(2)).sqrt();
        d <= self.radius * (1.0 + 1e-12) + 1e-12
    }

    fn from_two(a: (f64, f64), b: (f64, f64)) -> Self {
        let center = ((a.0 + b.0) * 0.5, (a.1 + b.1) * 0.5);
        let radius = 0.5 * ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        Circle { center, radius }
    }

    fn from_three(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Self {
        let (bx, by) = (b.0 - a.0, b.1 - a.1);
        let (cx, cy) = (c.0 - a.0, c.1 - a.1);
        let d = 2.0 * (bx * cy - by * cx);
        if d.abs() < 1e-18 {
            // collinear: the widest pair spans the circle
            let cands = [Self::from_two(a, b), Self::from_two(a, c), Self::from_two(b, c)];
            return cands
                .into_iter()
                .max_by(|p, q| p.radius.total_cmp(&q.radius))
                .unwrap();
        }
        let b2 = bx * bx + by * by;
        let c2 = cx * cx + cy * cy;
        let ux = (cy * b2 - by * c2) / d;
        let uy = (bx * c2 - cx * b2) / d;
        Circle {
            center: (a.0 + ux, a.1 + uy),
            radius: (ux * ux + uy * uy).sqrt(),
        }
    }
}

/// Smallest circle enclosing all points (Welzl's randomized incremental
/// algorithm, expected linear time). The shuffle uses a fixed seed, so the
/// result is deterministic. Empty input yields a zero circle at the origin.
pub fn min_enclosing_circle(points: &[(f64, f64)]) -> Circle {
    let mut pts = points.to_vec();
    if pts.is_empty() {
        return Circle {
            center: (0.0, 0.0),
            radius: 0.0,
        };
    }
    pts.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5eed));
    let mut c = Circle {
        center: pts[0],
        radius: 0.0,
    };
    for i in 1..pts.len() {
        if c.contains(pts[i]) {
            continue;
        }
        c = Circle {
            center: pts[i],
            radius: 0.0,
        };
        for j in 0..i {
            if c.contains(pts[j]) {
                continue;
            }
            c = Circle::from_two(pts[i], pts[j]);
            for k in 0..j {
                if !c.contains(pts[k]) {
                    c = Circle::from_three(pts[i], pts[j], pts[k]);
                }
            }
        }
    }
    c
}
