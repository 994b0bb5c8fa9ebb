//! End-to-end acceptance checks. Each check prints one PASS/FAIL line; the
//! process exits non-zero if any check fails. Reference values come from
//! closed forms or from brute-force implementations written here,
//! independent of the library's own algorithms.

use std::collections::{BinaryHeap, VecDeque};
use std::cmp::Reverse;
use std::sync::Arc;
use std::time::Instant;

use navbench::episodes::{generate_episodes, Episode, EpisodeError, EpisodeSet, Split};
use navbench::fixtures;
use navbench::geom::{heading, Vec3};
use navbench::mesh::{sample_surface, Mesh, PointCloud};
use navbench::metrics::{align_depth, pearson, recon_eval, srcc_report, DepthMap, EvalRecord};
use navbench::navmesh::{build_navgrid, Cell, Embodiment, NavGrid, COST_DIAGONAL, COST_STRAIGHT};
use navbench::protocol::{OraclePolicy, Policy, PolicyServer, RandomPolicy, RemotePolicy, DEFAULT_TIMEOUT};
use navbench::render::{camera_intrinsics, render_frame, Intrinsics, Pose};
use navbench::sim::{compute_reward, evaluate, run_episode, write_results_csv, Action, RewardParams, SceneAssets, SimConfig, StepContext};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type CheckFn = fn() -> Check;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- oracles

/// Plain Dijkstra over an 8-connected walkable mask without corner cutting.
fn dijkstra(mask: &[bool], nx: usize, nz: usize, start: usize) -> Vec<u64> {
    let mut dist = vec![u64::MAX; mask.len()];
    let mut heap = BinaryHeap::new();
    dist[start] = 0;
    heap.push(Reverse((0u64, start)));
    let open = |x: i64, z: i64| x >= 0 && z >= 0 && (x as usize) < nx && (z as usize) < nz && mask[z as usize * nx + x as usize];
    while let Some(Reverse((d, i))) = heap.pop() {
        if d > dist[i] {
            continue;
        }
        let (x, z) = ((i % nx) as i64, (i / nx) as i64);
        for dz in -1..=1i64 {
            for dx in -1..=1i64 {
                if (dx, dz) == (0, 0) || !open(x + dx, z + dz) {
                    continue;
                }
                let diagonal = dx != 0 && dz != 0;
                if diagonal && (!open(x + dx, z) || !open(x, z + dz)) {
                    continue;
                }
                let j = (z + dz) as usize * nx + (x + dx) as usize;
                let nd = d + if diagonal { COST_DIAGONAL } else { COST_STRAIGHT };
                if nd < dist[j] {
                    dist[j] = nd;
                    heap.push(Reverse((nd, j)));
                }
            }
        }
    }
    dist
}

/// 4-connected components by BFS; returns per-cell labels and sizes.
fn components(mask: &[bool], nx: usize, nz: usize) -> (Vec<Option<usize>>, Vec<usize>) {
    let mut label = vec![None; mask.len()];
    let mut sizes = Vec::new();
    for s in 0..mask.len() {
        if !mask[s] || label[s].is_some() {
            continue;
        }
        let id = sizes.len();
        let mut q = VecDeque::from([s]);
        label[s] = Some(id);
        let mut n = 0;
        while let Some(i) = q.pop_front() {
            n += 1;
            let (x, z) = (i % nx, i / nx);
            let mut nbs = Vec::new();
            if x > 0 {
                nbs.push(i - 1);
            }
            if x + 1 < nx {
                nbs.push(i + 1);
            }
            if z > 0 {
                nbs.push(i - nx);
            }
            if z + 1 < nz {
                nbs.push(i + nx);
            }
            for j in nbs {
                if mask[j] && label[j].is_none() {
                    label[j] = Some(id);
                    q.push_back(j);
                }
            }
        }
        sizes.push(n);
    }
    (label, sizes)
}

/// Plain Moller-Trumbore without tolerances.
fn ray_triangle(o: &Vec3, d: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Option<f64> {
    let (e1, e2) = (b - a, c - a);
    let p = d.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-14 {
        return None;
    }
    let s = o - a;
    let u = s.dot(&p) / det;
    let q = s.cross(&e1);
    let v = d.dot(&q) / det;
    if u < 0.0 || v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&q) / det;
    (t > 1e-9).then_some(t)
}

fn brute_raycast(mesh: &Mesh, o: &Vec3, d: &Vec3) -> Option<f64> {
    (0..mesh.triangle_count())
        .filter_map(|t| {
            let [a, b, c] = mesh.triangle(t);
            ray_triangle(o, d, &a, &b, &c)
        })
        .min_by(|a, b| a.total_cmp(b))
}

fn brute_nearest(q: &Vec3, pts: &[Vec3]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, p) in pts.iter().enumerate() {
        let d2 = (p - q).norm_squared();
        if d2 < best.1 {
            best = (i, d2);
        }
    }
    (best.0, best.1.sqrt())
}

// ----------------------------------------------------------------- checks

fn reward_exactness() -> Check {
    let p = RewardParams::default();
    ensure(
        (p.c_s, p.c_a, p.r_g, p.theta_g_deg, p.slack, p.c_coll) == (5.0, 5.0, 1.0, 25.0, 0.01, 0.03),
        || format!("default constants {p:?}"),
    )?;
    let theta = 10f64.to_radians();
    let cases = [
        (
            StepContext {
                d_prev: 0.6,
                d_cur: 0.5,
                theta_cur: theta,
                theta_hat_prev: theta + 0.05,
                theta_hat_cur: theta,
                action: Action::Stop,
                collided: false,
            },
            5.0 + 5.0 + 0.05 + 0.1 - 0.01,
        ),
        (
            StepContext {
                d_prev: 3.25,
                d_cur: 3.0,
                theta_cur: 2.0,
                theta_hat_prev: 0.0,
                theta_hat_cur: 0.0,
                action: Action::MoveForward,
                collided: false,
            },
            0.25 - 0.01,
        ),
        (
            StepContext {
                d_prev: 3.0,
                d_cur: 3.0,
                theta_cur: 2.0,
                theta_hat_prev: 0.0,
                theta_hat_cur: 0.0,
                action: Action::MoveForward,
                collided: true,
            },
            -0.01 - 0.03,
        ),
    ];
    for (i, (ctx, expected)) in cases.iter().enumerate() {
        let got = compute_reward(ctx, &p).total();
        ensure((got - expected).abs() <= 1e-12, || format!("example {}: {got} vs {expected}", i + 1))?;
    }
    Ok("10.14, 0.24, -0.04 reproduced".into())
}

fn pathfinding_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut compared = 0;
    for _ in 0..200 {
        let density = rng.random_range(0.1..0.35);
        let mask: Vec<bool> = (0..400).map(|_| rng.random::<f64>() >= density).collect();
        let rows: Vec<String> = mask.chunks(20).map(|r| r.iter().map(|&w| if w { '.' } else { '#' }).collect()).collect();
        let row_refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let grid = NavGrid::from_ascii(Vec3::zeros(), 0.1, &row_refs).map_err(|e| e.to_string())?;
        let open: Vec<usize> = (0..400).filter(|&i| mask[i]).collect();
        if open.len() < 2 {
            continue;
        }
        for _ in 0..5 {
            let s = open[rng.random_range(0..open.len())];
            let g = open[rng.random_range(0..open.len())];
            let oracle = dijkstra(&mask, 20, 20, s)[g];
            let astar = grid.astar(Cell::new((s % 20) as u32, (s / 20) as u32), Cell::new((g % 20) as u32, (g / 20) as u32));
            match (astar, oracle) {
                (None, u64::MAX) => {}
                (Some((c, _)), o) if c == o => {}
                (a, o) => return Err(format!("cells {s}->{g}: A* {:?} vs Dijkstra {o}", a.map(|x| x.0))),
            }
            compared += 1;
        }
    }
    Ok(format!("{compared} queries on 200 grids agree exactly"))
}

fn check_validity(grid: &NavGrid, set: &EpisodeSet) -> Result<(), String> {
    let (nx, nz) = grid.dims();
    let mask = grid.walkable_mask();
    let (label, sizes) = components(mask, nx, nz);
    let largest = (0..sizes.len()).max_by_key(|&i| (sizes[i], Reverse(i))).ok_or("no components")?;
    let cells: Vec<usize> = (0..mask.len()).filter(|&i| label[i] == Some(largest)).collect();
    // Half the largest pairwise span bounds the enclosing radius from below.
    let centers: Vec<(f64, f64)> = cells.iter().map(|&i| ((i % nx) as f64 + 0.5, (i / nx) as f64 + 0.5)).collect();
    let diameter = {
        let mut best: f64 = 0.0;
        let step = (centers.len() / 2000).max(1);
        for a in centers.iter().step_by(step) {
            for b in centers.iter().step_by(step) {
                best = best.max(((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt());
            }
        }
        best * grid.cell_size()
    };
    ensure(diameter / 2.0 > 2.0, || format!("largest island radius bound {:.3} m", diameter / 2.0))?;
    let cs = grid.cell_size();
    let o = grid.origin();
    let cell_of = |p: &Vec3| -> usize {
        let x = ((p.x - o.x) / cs).floor() as usize;
        let z = ((p.z - o.z) / cs).floor() as usize;
        z * nx + x
    };
    for ep in &set.episodes {
        let s = cell_of(&ep.start_position);
        let g = cell_of(&ep.goal_position);
        ensure(label[s] == Some(largest) && label[g] == Some(largest), || format!("episode {} off the largest island", ep.episode_id))?;
        let d = dijkstra(mask, nx, nz, s)[g];
        ensure(d != u64::MAX, || format!("episode {} unreachable", ep.episode_id))?;
        let meters = d as f64 / COST_STRAIGHT as f64 * cs;
        ensure(meters > 1.0, || format!("episode {} geodesic {meters:.3} m", ep.episode_id))?;
        // Integer costs round the diagonal up by under 3e-7 relative.
        ensure((meters - ep.geodesic_length).abs() <= 1e-6 * meters, || format!("episode {} stored geodesic {} vs {meters}", ep.episode_id, ep.geodesic_length))?;
    }
    Ok(())
}

fn episode_validity() -> Check {
    let emb = Embodiment::default();
    for (name, mesh) in [("room", fixtures::room_box(10.0, 6.0, 2.5)), ("two-room", fixtures::two_room_fixture())] {
        let grid = build_navgrid(&mesh, &emb, 0.05).map_err(|e| e.to_string())?;
        let set = generate_episodes(&grid, &emb, 1000, 17, name, Split::Val).map_err(|e| e.to_string())?;
        check_validity(&grid, &set).map_err(|e| format!("{name}: {e}"))?;
    }
    let small = build_navgrid(&fixtures::room_box(1.5, 1.5, 2.5), &emb, 0.05).map_err(|e| e.to_string());
    let rejected = match small {
        Err(_) => true,
        Ok(g) => matches!(generate_episodes(&g, &emb, 10, 1, "small", Split::Val), Err(EpisodeError::IslandTooSmall { .. } | EpisodeError::NoIsland)),
    };
    ensure(rejected, || "1.5 x 1.5 m room was accepted".into())?;
    Ok("2 x 1000 episodes valid; 1.5 m room rejected".into())
}

fn scene(name: &str, mesh: Mesh) -> Result<SceneAssets, String> {
    let grid = build_navgrid(&mesh, &Embodiment::default(), 0.05).map_err(|e| e.to_string())?;
    Ok(SceneAssets::new(name, mesh, grid))
}

fn sr(outcomes: &[navbench::sim::EpisodeOutcome]) -> Result<f64, String> {
    let results: Vec<_> = outcomes.iter().filter_map(|o| o.result().cloned()).collect();
    ensure(results.len() == outcomes.len(), || format!("{} episodes aborted", outcomes.len() - results.len()))?;
    navbench::metrics::success_rate(&results).map_err(|e| e.to_string())
}

fn oracle_navigation() -> Check {
    let emb = Embodiment::default();
    let cfg = SimConfig::default();
    let mut lines = Vec::new();
    let mut long_eps: Vec<(Arc<SceneAssets>, Episode)> = Vec::new();
    for (name, mesh) in [
        ("room", fixtures::room_box(10.0, 6.0, 2.5)),
        ("two-room", fixtures::two_room_fixture()),
        ("furnished", fixtures::furnished_room()),
    ] {
        let s = Arc::new(scene(name, mesh)?);
        let set = generate_episodes(&s.grid, &emb, 100, 5, name, Split::Val).map_err(|e| e.to_string())?;
        let mut oracle = OraclePolicy::new(Arc::new(s.grid.clone()), emb.clone(), &set.episodes);
        let out = evaluate(&s, &set.episodes, &mut oracle, &cfg);
        let rate = sr(&out)?;
        ensure(rate >= 0.99, || format!("{name}: oracle SR {rate}"))?;
        lines.push(format!("{name} {rate:.2}"));
        let more = generate_episodes(&s.grid, &emb, 300, 6, name, Split::Val).map_err(|e| e.to_string())?;
        long_eps.extend(more.episodes.into_iter().filter(|e| e.geodesic_length >= 5.0).map(|e| (s.clone(), e)));
    }
    ensure(long_eps.len() >= 100, || format!("only {} long episodes", long_eps.len()))?;
    let mut random = RandomPolicy::new(7);
    let mut wins = 0;
    for (s, ep) in &long_eps {
        let run = run_episode(s, ep, &mut random, &cfg).map_err(|e| e.to_string())?;
        wins += run.result.success as usize;
    }
    let rate = wins as f64 / long_eps.len() as f64;
    ensure(rate <= 0.10, || format!("random SR {rate}"))?;
    Ok(format!("oracle SR {}; random SR {rate:.3} on {} episodes >= 5 m", lines.join(", "), long_eps.len()))
}

fn renderer_correctness() -> Check {
    let k = Intrinsics::from_hfov(42f64.to_radians(), 64, 48);
    let scenes = [
        (fixtures::room_box(10.0, 6.0, 2.5), Pose::new(Vec3::new(2.0, 1.31, 3.0), -1.2)),
        (fixtures::two_room_fixture(), Pose::new(Vec3::new(2.0, 1.31, 2.0), -1.4)),
        (fixtures::furnished_room(), Pose::new(Vec3::new(4.0, 1.31, 5.0), 0.4)),
    ];
    let mut worst: f64 = 0.0;
    for (n, (mesh, pose)) in scenes.iter().enumerate() {
        let f = render_frame(mesh, pose, &k, [0; 3]);
        let fwd = heading(pose.yaw);
        let (r, u) = (Vec3::new(pose.yaw.cos(), 0.0, -pose.yaw.sin()), Vec3::y());
        for j in 0..k.height {
            for i in 0..k.width {
                let x = (i as f64 + 0.5 - k.cx) / k.fx;
                let y = (k.cy - (j as f64 + 0.5)) / k.fy;
                let d = (r * x + u * y + fwd).normalize();
                let z = brute_raycast(mesh, &pose.position, &d).map_or(0.0, |t| t * d.dot(&fwd));
                let diff = (f.depth_at(i, j) as f64 - z).abs();
                worst = worst.max(diff);
                ensure(diff <= 1e-3, || format!("scene {n} pixel ({i},{j}): raster {} vs ray {z}", f.depth_at(i, j)))?;
            }
        }
    }
    let full = camera_intrinsics(&Embodiment::default());
    let quad = fixtures::quad(Vec3::new(-0.5, -0.5, -3.0), Vec3::x(), Vec3::y(), [200, 0, 0]);
    let f = render_frame(&quad, &Pose::new(Vec3::zeros(), 0.0), &full, [0; 3]);
    let covered = f.depth.iter().filter(|&&d| d > 0.0).count() as f64 / f.depth.len() as f64;
    let fx = 320.0 / 21f64.to_radians().tan();
    let side = fx / 3.0;
    let derived = side * side / (640.0 * 480.0);
    ensure((covered - derived).abs() <= 0.01 && (covered - 0.2513).abs() <= 0.01, || format!("quad coverage {covered} vs {derived}"))?;
    ensure((full.fx - fx).abs() <= 0.01, || format!("fx {} vs {fx}", full.fx))?;
    Ok(format!("max depth error {worst:.2e} m; coverage {covered:.4}; fx {:.2}", full.fx))
}

fn recon_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut cloud = |n: usize, jitter: f64| {
        let pts: Vec<Vec3> = (0..n).map(|_| Vec3::new(rng.random::<f64>(), rng.random::<f64>() * jitter, rng.random::<f64>())).collect();
        let nrm: Vec<Vec3> = (0..n).map(|_| Vec3::new(rng.random::<f64>() - 0.5, 1.0, rng.random::<f64>() - 0.5).normalize()).collect();
        PointCloud::new(pts, Some(nrm)).unwrap()
    };
    let pred = cloud(500, 0.1);
    let gt = cloud(500, 0.05);
    let tau = 0.05;
    let m = recon_eval(&pred, &gt, tau).map_err(|e| e.to_string())?;
    let side = |a: &PointCloud, b: &PointCloud| {
        let (mut sum, mut hits, mut nc) = (0.0, 0usize, 0.0);
        for (i, p) in a.points().iter().enumerate() {
            let (j, d) = brute_nearest(p, b.points());
            sum += d;
            hits += (d <= tau) as usize;
            nc += a.normals().unwrap()[i].dot(&b.normals().unwrap()[j]).abs();
        }
        let n = a.len() as f64;
        (sum / n, hits as f64 / n, nc / n)
    };
    let (acc, prec, nc_a) = side(&pred, &gt);
    let (comp, rec, nc_b) = side(&gt, &pred);
    let fscore = if prec + rec > 0.0 { 2.0 * prec * rec / (prec + rec) } else { 0.0 };
    let expected = [acc, comp, (acc + comp) / 2.0, (nc_a + nc_b) / 2.0, fscore];
    let got = [m.acc, m.comp, m.c_l1, m.nc.unwrap_or(f64::NAN), m.fscore];
    for (name, (g, e)) in ["acc", "comp", "c_l1", "nc", "fscore"].iter().zip(got.iter().zip(&expected)) {
        ensure((g - e).abs() <= 1e-9, || format!("{name}: {g} vs brute force {e}"))?;
    }
    let id = recon_eval(&gt, &gt, tau).map_err(|e| e.to_string())?;
    ensure(
        (id.acc, id.comp, id.c_l1, id.nc, id.fscore) == (0.0, 0.0, 0.0, Some(1.0), 1.0),
        || format!("identity gave {id:?}"),
    )?;
    let one = |x: f64| PointCloud::new(vec![Vec3::new(x, 0.0, 0.0)], None).unwrap();
    let near = recon_eval(&one(0.0), &one(0.04), tau).map_err(|e| e.to_string())?;
    let far = recon_eval(&one(0.0), &one(0.06), tau).map_err(|e| e.to_string())?;
    ensure(near.fscore == 1.0 && far.fscore == 0.0, || format!("threshold: {} / {}", near.fscore, far.fscore))?;
    ensure((near.c_l1 - 0.04).abs() < 1e-12, || format!("c_l1 {}", near.c_l1))?;
    Ok(format!("5 metrics match brute force; fscore {:.4}", m.fscore))
}

fn depth_alignment() -> Check {
    let (w, h) = (40u32, 30u32);
    let gt: Vec<f32> = (0..w * h).map(|i| 0.8 + ((i * 37) % 211) as f32 * 0.02).collect();
    let gt = DepthMap::new(w, h, gt).map_err(|e| e.to_string())?;
    let mono = DepthMap::new(w, h, gt.data.iter().map(|d| 2.0 * d + 0.5).collect()).map_err(|e| e.to_string())?;
    let a = align_depth(&mono, &gt, None).map_err(|e| e.to_string())?;
    ensure((a.s - 0.5).abs() < 1e-4 && (a.b + 0.25).abs() < 1e-4 && a.residual <= 1e-3, || format!("{a:?}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for trial in 0..5 {
        let mut noisy = mono.clone();
        for d in noisy.data.iter_mut() {
            if rng.random::<f64>() < 0.01 {
                *d += rng.random_range(5.0..50.0);
            }
        }
        let r = align_depth(&noisy, &gt, None).map_err(|e| e.to_string())?;
        ensure(r.residual <= r.lsq_residual, || format!("trial {trial}: robust {} > lsq {}", r.residual, r.lsq_residual))?;
    }
    Ok(format!("recovered s={:.6} b={:.6}; robust <= lsq on outliers", a.s, a.b))
}

fn srcc() -> Check {
    let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0]).map_err(|e| e.to_string())?;
    ensure((r - 0.6).abs() <= 1e-12, || format!("pearson {r}"))?;
    let recs: Vec<EvalRecord> = [3, 5, 8, 9]
        .iter()
        .enumerate()
        .map(|(i, &wins)| EvalRecord {
            setting: format!("policy{i}/scene/mesh"),
            successes: (0..10).map(|k| k < wins).collect(),
        })
        .collect();
    let rep = srcc_report(&recs, &recs).map_err(|e| e.to_string())?;
    ensure((rep.r - 1.0).abs() <= 1e-12, || format!("identical records gave r = {}", rep.r))?;
    Ok("pearson 0.6 exact; identical sim/real gives 1.0".into())
}

fn protocol_transparency() -> Check {
    let emb = Embodiment::default();
    let cfg = SimConfig::default();
    let s = scene("furnished", fixtures::furnished_room())?;
    let set = generate_episodes(&s.grid, &emb, 20, 21, "furnished", Split::Val).map_err(|e| e.to_string())?;
    let grid = Arc::new(s.grid.clone());
    let proto = OraclePolicy::new(grid, emb.clone(), &set.episodes);
    let factory_proto = proto.clone();
    let server = PolicyServer::start(Arc::new(move || Box::new(factory_proto.clone()) as Box<dyn Policy>), "127.0.0.1:0").map_err(|e| e.to_string())?;
    let mut remote = RemotePolicy::new(&server.url(), "acceptance", DEFAULT_TIMEOUT).map_err(|e| e.to_string())?;
    remote.health().map_err(|e| e.to_string())?;
    let mut local = proto;
    let mut steps = 0;
    for ep in &set.episodes {
        let a = run_episode(&s, ep, &mut local, &cfg).map_err(|e| e.to_string())?;
        let b = run_episode(&s, ep, &mut remote, &cfg).map_err(|e| e.to_string())?;
        ensure(a.actions == b.actions, || format!("episode {}: action sequences differ", ep.episode_id))?;
        ensure(a.result == b.result, || format!("episode {}: {:?} vs {:?}", ep.episode_id, a.result, b.result))?;
        ensure(a.result.reward.to_bits() == b.result.reward.to_bits(), || "reward bits differ".into())?;
        steps += a.actions.len();
    }
    server.shutdown().map_err(|e| e.to_string())?;
    Ok(format!("20 episodes, {steps} steps identical over loopback"))
}

fn determinism() -> Check {
    let emb = Embodiment::default();
    let once = || -> Result<Vec<Vec<u8>>, String> {
        let mesh = fixtures::furnished_room();
        let cloud = sample_surface(&mesh, 5000, 9).map_err(|e| e.to_string())?;
        let cloud_bytes: Vec<u8> = cloud.points().iter().flat_map(|p| [p.x, p.y, p.z]).flat_map(f64::to_le_bytes).collect();
        let s = scene("furnished", mesh)?;
        let set = generate_episodes(&s.grid, &emb, 50, 10, "furnished", Split::Train).map_err(|e| e.to_string())?;
        let json = navbench::episodes::to_json(&set).map_err(|e| e.to_string())?.into_bytes();
        let out = evaluate(&s, &set.episodes[..20], &mut RandomPolicy::new(11), &SimConfig::default());
        let mut csv = Vec::new();
        write_results_csv(&mut csv, &out, &RewardParams::default()).map_err(|e| e.to_string())?;
        Ok(vec![cloud_bytes, json, csv])
    };
    let (a, b) = (once()?, once()?);
    for (name, (x, y)) in ["surface sampling", "episode generation", "random policy"].iter().zip(a.iter().zip(&b)) {
        ensure(x == y, || format!("{name} differs between runs"))?;
    }
    Ok("sampling, generation and random policy byte-identical across runs".into())
}

fn main() {
    let checks: [(&str, CheckFn); 10] = [
        ("reward exactness", reward_exactness),
        ("pathfinding oracle equivalence", pathfinding_equivalence),
        ("episode validity", episode_validity),
        ("oracle navigation", oracle_navigation),
        ("renderer correctness", renderer_correctness),
        ("reconstruction metrics oracle", recon_oracle),
        ("depth alignment", depth_alignment),
        ("sim-vs-real correlation", srcc),
        ("protocol transparency", protocol_transparency),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({secs:.1} s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({secs:.1} s): {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
