use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Mesh, MeshError, MeshResult, PointCloud};

/// Draws `n` points uniformly by area over the non-degenerate triangles.
///
/// Each point carries its source triangle's geometric normal. Output is a
/// pure function of `(mesh, n, seed)`.
pub fn sample_surface(mesh: &Mesh, n: usize, seed: u64) -> MeshResult<PointCloud> {
    let (points, normals, _) = sample_with_sources(mesh, n, seed)?;
    PointCloud::new(points, Some(normals))
}

/// Same as [`sample_surface`] but also returns the source triangle index of
/// every sample.
pub(crate) fn sample_with_sources(
    mesh: &Mesh,
    n: usize,
    seed: u64,
) -> MeshResult<(Vec<crate::Vec3>, Vec<crate::Vec3>, Vec<usize>)> {
    if n == 0 {
        return Err(MeshError::NoSamples);
    }
    let mut cumulative = Vec::with_capacity(mesh.triangle_count());
    let mut tris = Vec::with_capacity(mesh.triangle_count());
    let mut total = 0.0;
    for t in 0..mesh.triangle_count() {
        if mesh.is_degenerate(t) {
            continue;
        }
        let a = mesh.triangle_area(t);
        if a > 0.0 {
            total += a;
            cumulative.push(total);
            tris.push(t);
        }
    }
    if tris.is_empty() {
        return Err(MeshError::AllDegenerate);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    let mut sources = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * total;
        let k = cumulative.partition_point(|&c| c <= u).min(tris.len() - 1);
        let t = tris[k];
        let [a, b, c] = mesh.triangle(t);
        let r1: f64 = rng.random::<f64>().sqrt();
        let r2: f64 = rng.random();
        let p = a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2);
        points.push(p);
        normals.push(mesh.triangle_normal(t).expect("non-degenerate"));
        sources.push(t);
    }
    Ok((points, normals, sources))
}
