//! `navbench`: builds navigation benchmarks from scene meshes and evaluates
//! policies on them.
//!
//! Exit codes: 0 on success, 1 when a stage fails on its inputs, 2 on a
//! usage or configuration error.

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use navbench::episodes::Split;
use navbench::UpAxis;

mod commands;
mod config;

/// Invocation error: bad flag values, unreadable or invalid configuration.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(name = "navbench", version, about = "Image-goal navigation benchmarks from indoor scene meshes")]
struct Cli {
    /// TOML config file (default: $NAVBENCH_CONFIG).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mesh file utilities.
    #[command(subcommand)]
    Mesh(MeshCmd),
    /// Walkable-grid construction.
    #[command(subcommand)]
    Navmesh(NavmeshCmd),
    /// Episode generation and statistics.
    #[command(subcommand)]
    Episodes(EpisodesCmd),
    /// Render one RGB (and optionally depth) frame.
    Render(RenderArgs),
    /// Run policies in the simulator.
    #[command(subcommand)]
    Sim(SimCmd),
    /// Serve a policy over HTTP until interrupted.
    ServePolicy(ServeArgs),
    /// Sim-vs-real evaluation.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Reconstruction quality metrics.
    #[command(subcommand)]
    Recon(ReconCmd),
}

#[derive(Debug, Subcommand)]
enum MeshCmd {
    /// Rewrite a PLY file in another up-axis convention.
    Convert(ConvertArgs),
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[arg(long = "in", value_name = "PLY")]
    input: PathBuf,
    #[arg(long = "out", value_name = "PLY")]
    output: PathBuf,
    #[arg(long, value_name = "AXIS")]
    from: UpAxis,
    #[arg(long, value_name = "AXIS")]
    to: UpAxis,
    /// Write ASCII instead of binary little-endian.
    #[arg(long)]
    ascii: bool,
}

#[derive(Debug, Subcommand)]
enum NavmeshCmd {
    /// Build and cache the walkable grid of a scene.
    Build(BuildArgs),
}

#[derive(Debug, Args)]
struct SceneArgs {
    /// Scene mesh (PLY).
    #[arg(long, value_name = "PLY")]
    scene: PathBuf,
    /// Up axis of the scene file.
    #[arg(long, value_name = "AXIS")]
    up: Option<UpAxis>,
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long, value_name = "NAVG")]
    out: PathBuf,
    /// Cell size in meters.
    #[arg(long, value_name = "METERS", allow_negative_numbers = true, value_parser = positive_f64)]
    cell: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum EpisodesCmd {
    /// Sample episodes on the largest island of a cached grid.
    Generate(GenerateArgs),
    /// Print geodesic-length statistics of an episode file.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, value_name = "NAVG")]
    navgrid: PathBuf,
    #[arg(long, value_name = "COUNT", value_parser = positive_usize)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    split: Option<Split>,
    /// Scene id stored in the file (default: the grid file stem).
    #[arg(long)]
    scene_id: Option<String>,
    #[arg(long, value_name = "JSON")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long = "in", value_name = "JSON")]
    input: PathBuf,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Camera eye position and yaw: `x,y,z,yaw` (meters, radians, Y-up).
    #[arg(long, value_name = "X,Y,Z,YAW", allow_negative_numbers = true)]
    pose: PoseArg,
    #[arg(long, value_name = "PNG")]
    out: PathBuf,
    /// Also write depth as raw f32 with a JSON sidecar.
    #[arg(long, value_name = "F32")]
    depth: Option<PathBuf>,
    #[arg(long, value_parser = positive_u32)]
    width: Option<u32>,
    #[arg(long, value_parser = positive_u32)]
    height: Option<u32>,
}

#[derive(Debug, Clone, Copy)]
struct PoseArg([f64; 4]);

impl FromStr for PoseArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
            .collect::<Result<_, _>>()?;
        match parts[..] {
            [x, y, z, yaw] if parts.iter().all(|v| v.is_finite()) => Ok(PoseArg([x, y, z, yaw])),
            _ => Err("expected four finite numbers x,y,z,yaw".into()),
        }
    }
}

#[derive(Debug, Subcommand)]
enum SimCmd {
    /// Evaluate a policy on an episode file and write a results CSV.
    Run(RunArgs),
}

/// `oracle`, `random`, or `remote:URL`.
#[derive(Debug, Clone, PartialEq)]
enum PolicyArg {
    Oracle,
    Random,
    Remote(String),
}

impl FromStr for PolicyArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(PolicyArg::Oracle),
            "random" => Ok(PolicyArg::Random),
            _ => match s.strip_prefix("remote:") {
                Some(url) if !url.is_empty() => Ok(PolicyArg::Remote(url.to_string())),
                _ => Err(format!("unknown policy `{s}` (expected oracle, random or remote:URL)")),
            },
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Cached grid; built from the scene when omitted.
    #[arg(long, value_name = "NAVG")]
    navgrid: Option<PathBuf>,
    #[arg(long, value_name = "JSON")]
    episodes: PathBuf,
    #[arg(long)]
    policy: PolicyArg,
    #[arg(long, value_name = "CSV")]
    out: PathBuf,
    #[arg(long, value_parser = positive_u32)]
    max_steps: Option<u32>,
    /// Seed for the random policy.
    #[arg(long)]
    seed: Option<u64>,
    /// Episodes run in parallel.
    #[arg(long, value_parser = positive_usize)]
    jobs: Option<usize>,
    /// Directory for per-episode JSON-lines trajectories.
    #[arg(long, value_name = "DIR")]
    trajectory: Option<PathBuf>,
    /// Scene id to match against episodes (default: the scene file stem).
    #[arg(long)]
    scene_id: Option<String>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// `oracle` or `random`.
    #[arg(long)]
    policy: PolicyArg,
    /// Scene mesh, used to build the grid when --navgrid is omitted.
    #[arg(long, value_name = "PLY")]
    scene: Option<PathBuf>,
    #[arg(long, value_name = "AXIS")]
    up: Option<UpAxis>,
    #[arg(long, value_name = "NAVG")]
    navgrid: Option<PathBuf>,
    /// Episodes the oracle may be reset to.
    #[arg(long, value_name = "JSON")]
    episodes: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "HOST:PORT")]
    addr: Option<String>,
}

#[derive(Debug, Subcommand)]
enum EvalCmd {
    /// Correlate per-setting success rates between simulation and reality.
    Srcc(SrccArgs),
}

#[derive(Debug, Args)]
struct SrccArgs {
    #[arg(long, value_name = "CSV")]
    sim: PathBuf,
    #[arg(long, value_name = "CSV")]
    real: PathBuf,
    #[arg(long, value_name = "JSON")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum ReconCmd {
    /// Accuracy, completeness, normal consistency and F-score of a reconstruction.
    Eval(ReconArgs),
    /// Fit scale and bias of a monocular depth map to ground truth.
    AlignDepth(AlignArgs),
}

#[derive(Debug, Args)]
struct ReconArgs {
    #[arg(long, value_name = "PLY")]
    pred: PathBuf,
    #[arg(long, value_name = "PLY")]
    gt: PathBuf,
    #[arg(long, value_name = "AXIS")]
    up: Option<UpAxis>,
    #[arg(long, value_name = "METERS", allow_negative_numbers = true, value_parser = positive_f64)]
    tau: Option<f64>,
    /// Surface samples per mesh; point clouds are used as-is.
    #[arg(long, value_parser = positive_usize)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "JSON")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AlignArgs {
    #[arg(long, value_name = "F32")]
    mono: PathBuf,
    #[arg(long, value_name = "F32")]
    gt: PathBuf,
    #[arg(long, value_name = "JSON")]
    out: Option<PathBuf>,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        Ok(_) => Err("must be positive".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        r => r.map_err(|e| e.to_string()),
    }
}

fn positive_u32(s: &str) -> Result<u32, String> {
    match s.parse::<u32>() {
        Ok(0) => Err("must be at least 1".into()),
        r => r.map_err(|e| e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
