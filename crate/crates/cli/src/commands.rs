use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use navbench::episodes::{episode_stats, generate_episodes, load_episodes_with_warnings, save_episodes, Episode};
use navbench::mesh::{load_ply, sample_surface, write_ply_file, PlyEncoding};
use navbench::metrics::{align_depth, read_eval_records, recon_eval, srcc_report, success_rate, DepthMap};
use navbench::navmesh::{build_navgrid, read_navgrid, write_navgrid, Embodiment, NavGrid};
use navbench::protocol::{OraclePolicy, Policy, PolicyServer, RandomPolicy, RemotePolicy};
use navbench::render::{camera_intrinsics, render_frame, Pose};
use navbench::sim::{evaluate, write_results_csv, write_trajectory, EpisodeOutcome, SceneAssets};
use navbench::{Mesh, PointCloud, UpAxis, Vec3};
use rayon::prelude::*;

use crate::config::Config;
use crate::*;

pub fn run(cli: Cli) -> Result<()> {
    let cfg = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Mesh(MeshCmd::Convert(a)) => mesh_convert(a),
        Command::Navmesh(NavmeshCmd::Build(a)) => navmesh_build(&cfg, a),
        Command::Episodes(EpisodesCmd::Generate(a)) => episodes_generate(&cfg, a),
        Command::Episodes(EpisodesCmd::Stats(a)) => episodes_stats(a),
        Command::Render(a) => render(&cfg, a),
        Command::Sim(SimCmd::Run(a)) => sim_run(&cfg, a),
        Command::ServePolicy(a) => serve_policy(&cfg, a),
        Command::Eval(EvalCmd::Srcc(a)) => eval_srcc(a),
        Command::Recon(ReconCmd::Eval(a)) => recon(&cfg, a),
        Command::Recon(ReconCmd::AlignDepth(a)) => align(a),
    }
}

fn load_scene(cfg: &Config, path: &Path, up: Option<UpAxis>) -> Result<Mesh> {
    let up = up.unwrap_or(cfg.navmesh.up_axis);
    let mesh = load_ply(path, up).with_context(|| format!("loading {}", path.display()))?;
    Ok(mesh.convert_axis(UpAxis::YUp))
}

fn load_grid(path: &Path) -> Result<NavGrid> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_navgrid(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn load_episode_file(path: &Path) -> Result<Vec<Episode>> {
    let (set, warnings) = load_episodes_with_warnings(path).with_context(|| format!("reading {}", path.display()))?;
    for w in warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(set.episodes)
}

fn write_json(path: Option<&Path>, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn mesh_convert(a: ConvertArgs) -> Result<()> {
    let mesh = load_ply(&a.input, a.from).with_context(|| format!("loading {}", a.input.display()))?;
    let encoding = if a.ascii { PlyEncoding::Ascii } else { PlyEncoding::BinaryLittleEndian };
    write_ply_file(&mesh.convert_axis(a.to), &a.output, encoding).with_context(|| format!("writing {}", a.output.display()))?;
    Ok(())
}

fn navmesh_build(cfg: &Config, a: BuildArgs) -> Result<()> {
    let mesh = load_scene(cfg, &a.scene.scene, a.scene.up)?;
    let grid = build_navgrid(&mesh, &cfg.embodiment, a.cell.unwrap_or(cfg.navmesh.cell_size))?;
    let mut w = BufWriter::new(File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?);
    write_navgrid(&grid, &mut w)?;
    w.flush()?;
    let (nx, nz) = grid.dims();
    let largest = grid.largest_island().map_or(0.0, |i| i.enclosing_radius);
    println!(
        "{nx}x{nz} cells of {} m, walkable {:.2} m2, {} islands, largest radius {largest:.2} m",
        grid.cell_size(),
        grid.walkable_area(),
        grid.islands().len()
    );
    Ok(())
}

fn episodes_generate(cfg: &Config, a: GenerateArgs) -> Result<()> {
    let grid = load_grid(&a.navgrid)?;
    let scene_id = a.scene_id.unwrap_or_else(|| file_stem(&a.navgrid));
    let set = generate_episodes(
        &grid,
        &cfg.embodiment,
        a.n.unwrap_or(cfg.episodes.n),
        a.seed.unwrap_or(cfg.episodes.seed),
        &scene_id,
        a.split.unwrap_or(cfg.episodes.split),
    )?;
    save_episodes(&set, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    println!("wrote {} episodes to {}", set.episodes.len(), a.out.display());
    Ok(())
}

fn episodes_stats(a: StatsArgs) -> Result<()> {
    let (set, warnings) = load_episodes_with_warnings(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    for w in warnings {
        log::warn!("{w}");
    }
    let s = episode_stats(&set)?;
    println!("{:<10}{:>10}", "episodes", s.count);
    println!("{:<10}{:>10.4}", "min", s.min);
    println!("{:<10}{:>10.4}", "max", s.max);
    println!("{:<10}{:>10.4}", "mean", s.mean);
    Ok(())
}

fn render(cfg: &Config, a: RenderArgs) -> Result<()> {
    let mesh = load_scene(cfg, &a.scene.scene, a.scene.up)?;
    let emb = Embodiment {
        image_width: a.width.unwrap_or(cfg.embodiment.image_width),
        image_height: a.height.unwrap_or(cfg.embodiment.image_height),
        ..cfg.embodiment.clone()
    };
    let [x, y, z, yaw] = a.pose.0;
    let frame = render_frame(&mesh, &Pose::new(Vec3::new(x, y, z), yaw), &camera_intrinsics(&emb), [0; 3]);
    frame.save_png(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(path) = a.depth {
        DepthMap::new(frame.width, frame.height, frame.depth)?
            .write_raw(&path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

struct PolicySource {
    kind: PolicyArg,
    grid: Arc<NavGrid>,
    embodiment: Embodiment,
    episodes: Vec<Episode>,
    seed: u64,
    timeout: Duration,
}

impl PolicySource {
    fn make(&self, session: &str) -> Result<Box<dyn Policy>> {
        Ok(match &self.kind {
            PolicyArg::Oracle => Box::new(OraclePolicy::new(self.grid.clone(), self.embodiment.clone(), &self.episodes)),
            PolicyArg::Random => Box::new(RandomPolicy::new(self.seed)),
            PolicyArg::Remote(url) => Box::new(RemotePolicy::new(url, session, self.timeout)?),
        })
    }
}

fn sim_run(cfg: &Config, a: RunArgs) -> Result<()> {
    let sim_cfg = cfg.sim_config(a.max_steps);
    let mesh = load_scene(cfg, &a.scene.scene, a.scene.up)?;
    let grid = match &a.navgrid {
        Some(p) => load_grid(p)?,
        None => build_navgrid(&mesh, &cfg.embodiment, cfg.navmesh.cell_size)?,
    };
    let episodes = load_episode_file(&a.episodes)?;
    let scene_id = a.scene_id.unwrap_or_else(|| file_stem(&a.scene.scene));
    let source = PolicySource {
        kind: a.policy,
        grid: Arc::new(grid.clone()),
        embodiment: cfg.embodiment.clone(),
        episodes: episodes.clone(),
        seed: a.seed.unwrap_or(cfg.sim.seed),
        timeout: Duration::from_secs_f64(cfg.protocol.timeout_secs),
    };
    if let PolicyArg::Remote(url) = &source.kind {
        RemotePolicy::new(url, "probe", source.timeout)?
            .health()
            .with_context(|| format!("policy server {url}"))?;
    }
    let scene = SceneAssets::new(scene_id, mesh, grid);
    let jobs = a.jobs.unwrap_or(cfg.sim.jobs);

    let outcomes: Vec<EpisodeOutcome> = if jobs == 1 {
        evaluate(&scene, &episodes, source.make("sim-0")?.as_mut(), &sim_cfg)
    } else {
        let sessions = AtomicUsize::new(0);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
        pool.install(|| {
            episodes
                .par_iter()
                .map_init(
                    || source.make(&format!("sim-{}", sessions.fetch_add(1, Ordering::Relaxed))),
                    |policy, ep| match policy {
                        Ok(p) => evaluate(&scene, std::slice::from_ref(ep), p.as_mut(), &sim_cfg).remove(0),
                        Err(e) => EpisodeOutcome::Aborted {
                            episode_id: ep.episode_id,
                            error: format!("{e:#}"),
                        },
                    },
                )
                .collect()
        })
    };

    let mut w = BufWriter::new(File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?);
    write_results_csv(&mut w, &outcomes, &sim_cfg.reward)?;
    w.flush()?;

    if let Some(dir) = &a.trajectory {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for o in &outcomes {
            if let EpisodeOutcome::Completed(run) = o {
                let path = dir.join(format!("episode_{:05}.jsonl", run.result.episode_id));
                let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
                write_trajectory(&mut w, &run.trajectory)?;
                w.flush()?;
            }
        }
    }

    let results: Vec<_> = outcomes.iter().filter_map(|o| o.result().cloned()).collect();
    let aborted = outcomes.len() - results.len();
    if results.is_empty() && !outcomes.is_empty() {
        bail!("all {aborted} episodes aborted");
    }
    let sr = success_rate(&results).unwrap_or(0.0);
    println!("{} episodes, success rate {sr:.4}, {aborted} aborted", outcomes.len());
    Ok(())
}

fn serve_policy(cfg: &Config, a: ServeArgs) -> Result<()> {
    let addr = a.addr.unwrap_or_else(|| cfg.protocol.addr.clone());
    let seed = a.seed.unwrap_or(cfg.sim.seed);
    let factory: navbench::protocol::PolicyFactory = match a.policy {
        PolicyArg::Random => Arc::new(move || Box::new(RandomPolicy::new(seed)) as Box<dyn Policy>),
        PolicyArg::Oracle => {
            let Some(episodes) = &a.episodes else {
                return Err(UsageError("--policy oracle needs --episodes".into()).into());
            };
            let grid = match (&a.navgrid, &a.scene) {
                (Some(p), _) => load_grid(p)?,
                (None, Some(scene)) => build_navgrid(&load_scene(cfg, scene, a.up)?, &cfg.embodiment, cfg.navmesh.cell_size)?,
                (None, None) => return Err(UsageError("--policy oracle needs --navgrid or --scene".into()).into()),
            };
            let proto = OraclePolicy::new(Arc::new(grid), cfg.embodiment.clone(), &load_episode_file(episodes)?);
            Arc::new(move || Box::new(proto.clone()) as Box<dyn Policy>)
        }
        PolicyArg::Remote(_) => return Err(UsageError("serve-policy --policy must be oracle or random".into()).into()),
    };
    let server = PolicyServer::start(factory, &addr).with_context(|| format!("binding {addr}"))?;
    println!("listening on {}", server.url());
    std::io::stdout().flush()?;
    server.wait_for_signal()?;
    Ok(())
}

fn eval_srcc(a: SrccArgs) -> Result<()> {
    let read = |p: &Path| -> Result<_> {
        let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
        read_eval_records(BufReader::new(f)).with_context(|| format!("reading {}", p.display()))
    };
    let report = srcc_report(&read(&a.sim)?, &read(&a.real)?)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    write_json(Some(&a.out), &report)?;
    println!("SRCC r = {:.4} over {} settings", report.r, report.rows.len());
    Ok(())
}

fn point_set(path: &Path, up: UpAxis, samples: usize, seed: u64) -> Result<PointCloud> {
    let mesh = load_ply(path, up).with_context(|| format!("loading {}", path.display()))?.convert_axis(UpAxis::YUp);
    if mesh.triangle_count() == 0 {
        return Ok(PointCloud::from_vertices(&mesh));
    }
    Ok(sample_surface(&mesh, samples, seed)?)
}

fn recon(cfg: &Config, a: ReconArgs) -> Result<()> {
    let up = a.up.unwrap_or(cfg.navmesh.up_axis);
    let samples = a.samples.unwrap_or(cfg.recon.samples);
    let seed = a.seed.unwrap_or(cfg.recon.seed);
    let pred = point_set(&a.pred, up, samples, seed)?;
    let gt = point_set(&a.gt, up, samples, seed)?;
    let m = recon_eval(&pred, &gt, a.tau.unwrap_or(cfg.recon.tau))?;
    write_json(a.out.as_deref(), &m)
}

fn align(a: AlignArgs) -> Result<()> {
    let read = |p: &Path| DepthMap::read_raw(p).with_context(|| format!("reading {}", p.display()));
    let fit = align_depth(&read(&a.mono)?, &read(&a.gt)?, None)?;
    write_json(a.out.as_deref(), &fit)
}
