use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mvpose3d::io::{self, IoError};
use mvpose3d::metrics::{frame_span, mota_score};
use mvpose3d::pipeline::{
    self, estimate_poses, permute_cameras, run_pipeline, smooth_tracks, sweep_sigma, write_scene, Dataset, ErrorKind,
    PipelineError, RunConfig,
};
use mvpose3d::synth::{generate_scene, MotionModel, SceneSpec};
use mvpose3d::tracking::{track_sequence, Axis};
use mvpose3d::EpipolarMetric;

#[derive(Parser)]
#[command(name = "mvpose3d", version, about = "Multi-view multi-person 3D pose estimation and tracking")]
struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Association, triangulation, tracking and optional smoothing; writes tracks and a report.
    Pipeline {
        #[arg(long)]
        manifest: PathBuf,
        /// Output track file.
        #[arg(long)]
        out: PathBuf,
        /// Report file (JSON); printed to stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Per-frame association and triangulation only; writes untracked 3D poses.
    Associate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Links untracked 3D poses into tracks.
    Track {
        #[arg(long)]
        poses: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Fills gaps and smooths a track file.
    Smooth {
        #[arg(long)]
        tracks: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// PCP of predicted tracks against ground-truth tracks.
    EvalPcp {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Skeleton definition; the 14-joint body skeleton when omitted.
        #[arg(long)]
        skeleton: Option<PathBuf>,
        /// Print a text table instead of JSON.
        #[arg(long)]
        table: bool,
        #[command(flatten)]
        run: RunArgs,
    },
    /// MOTA of predicted tracks against ground-truth tracks.
    EvalMota {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Writes a synthetic dataset (manifest, calibration, detections, ground truth).
    Synth {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        scene: SceneArgs,
    },
    /// PCP of the smoothed tracks for a list of σ values.
    SweepSigma {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 50.0])]
        sigmas: Vec<f64>,
        /// Emit JSON instead of a tab-separated table.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        run: RunArgs,
    },
    /// PCP for every camera processing order.
    PermuteCameras {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Geometric,
    Algebraic,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    X,
    Y,
    Z,
}

/// Flags named after the run configuration fields. A `--config` file is
/// read first and any flag given overrides it.
#[derive(Args, Default)]
struct RunArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Association threshold on the epipolar cost, pixels.
    #[arg(long)]
    theta: Option<f64>,
    /// Camera processing order, comma separated ids.
    #[arg(long, value_delimiter = ',')]
    camera_order: Option<Vec<usize>>,
    #[arg(long)]
    metric: Option<MetricArg>,
    #[arg(long)]
    min_shared_joints: Option<usize>,
    /// Tracking threshold, mm.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    max_gap: Option<usize>,
    #[arg(long)]
    ground_plane_axis: Option<AxisArg>,
    /// Gaussian smoothing σ, frames.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    fill_window: Option<usize>,
    #[arg(long)]
    kernel_radius: Option<f64>,
    /// Disable track smoothing.
    #[arg(long)]
    no_smooth: bool,
    /// PCP threshold as a fraction of limb length.
    #[arg(long)]
    alpha: Option<f64>,
    /// MOTA match threshold, mm.
    #[arg(long)]
    match_threshold: Option<f64>,
    /// Estimation threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, PipelineError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let a = &mut cfg.association;
        set(&mut a.theta, self.theta);
        if let Some(order) = &self.camera_order {
            a.camera_order = Some(order.clone());
        }
        if let Some(m) = self.metric {
            a.metric = match m {
                MetricArg::Geometric => EpipolarMetric::Geometric,
                MetricArg::Algebraic => EpipolarMetric::Algebraic,
            };
        }
        set(&mut a.min_shared_joints, self.min_shared_joints);
        let t = &mut cfg.tracking;
        set(&mut t.tau, self.tau);
        set(&mut t.max_gap, self.max_gap);
        if let Some(axis) = self.ground_plane_axis {
            t.ground_plane_axis = match axis {
                AxisArg::X => Axis::X,
                AxisArg::Y => Axis::Y,
                AxisArg::Z => Axis::Z,
            };
        }
        let s = &mut cfg.smoothing;
        set(&mut s.sigma, self.sigma);
        set(&mut s.fill_window, self.fill_window);
        set(&mut s.kernel_radius, self.kernel_radius);
        if self.no_smooth {
            cfg.smooth = false;
        }
        set(&mut cfg.alpha, self.alpha);
        set(&mut cfg.match_threshold, self.match_threshold);
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MotionArg {
    Static,
    LinearWalk,
    SinusoidalLimbs,
}

#[derive(Args)]
struct SceneArgs {
    /// Scene spec (JSON); flags override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    n_people: Option<usize>,
    #[arg(long)]
    n_cameras: Option<usize>,
    #[arg(long)]
    n_frames: Option<usize>,
    #[arg(long)]
    motion: Option<MotionArg>,
    #[arg(long)]
    pixel_noise_sigma: Option<f64>,
    #[arg(long)]
    joint_dropout_prob: Option<f64>,
    #[arg(long)]
    truncation_prob: Option<f64>,
    #[arg(long)]
    left_right_flip_prob: Option<f64>,
    /// Restrict left/right flips to these camera ids.
    #[arg(long, value_delimiter = ',')]
    flip_cameras: Option<Vec<usize>>,
    #[arg(long)]
    min_separation: Option<f64>,
    /// Falls back to MVPOSE3D_SEED, then to the spec file.
    #[arg(long, env = "MVPOSE3D_SEED")]
    rng_seed: Option<u64>,
}

impl SceneArgs {
    fn resolve(&self) -> Result<SceneSpec, PipelineError> {
        let mut spec = match &self.spec {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| IoError::Io {
                    path: path.clone(),
                    source,
                })?;
                serde_json::from_str(&text).map_err(|e| IoError::Schema {
                    path: path.clone(),
                    line: Some(e.line()),
                    column: Some(e.column()),
                    message: e.to_string(),
                })?
            }
            None => SceneSpec::default(),
        };
        set(&mut spec.n_people, self.n_people);
        set(&mut spec.n_cameras, self.n_cameras);
        set(&mut spec.n_frames, self.n_frames);
        if let Some(m) = self.motion {
            spec.motion = match m {
                MotionArg::Static => MotionModel::Static,
                MotionArg::LinearWalk => MotionModel::LinearWalk,
                MotionArg::SinusoidalLimbs => MotionModel::SinusoidalLimbs,
            };
        }
        set(&mut spec.pixel_noise_sigma, self.pixel_noise_sigma);
        set(&mut spec.joint_dropout_prob, self.joint_dropout_prob);
        set(&mut spec.truncation_prob, self.truncation_prob);
        set(&mut spec.left_right_flip_prob, self.left_right_flip_prob);
        if let Some(c) = &self.flip_cameras {
            spec.flip_cameras = Some(c.clone());
        }
        set(&mut spec.min_separation, self.min_separation);
        set(&mut spec.rng_seed, self.rng_seed);
        spec.validate()?;
        Ok(spec)
    }
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("in-memory serialization cannot fail"));
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).expect("in-memory serialization cannot fail");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| {
        PipelineError::Io(IoError::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

fn run(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Pipeline {
            manifest,
            out,
            report,
            run,
        } => {
            let cfg = run.resolve()?;
            let dataset = Dataset::load(&manifest)?;
            let output = run_pipeline(&dataset, &cfg)?;
            io::write_tracks(&output.tracks, &out)?;
            match report {
                Some(path) => write_json(&output.report, &path)?,
                None => print_json(&output.report),
            }
        }
        Command::Associate { manifest, out, run } => {
            let cfg = run.resolve()?;
            let dataset = Dataset::load(&manifest)?;
            cfg.validate_for(&dataset.rig)?;
            let poses = estimate_poses(&dataset, &cfg.association, cfg.workers)?;
            io::write_pose_sequence(&poses, &out)?;
        }
        Command::Track { poses, out, run } => {
            let cfg = run.resolve()?;
            let frames = io::load_pose_sequence(&poses)?;
            let tracks = track_sequence(frames, &cfg.tracking)?;
            io::write_tracks(&tracks, &out)?;
        }
        Command::Smooth { tracks, out, run } => {
            let cfg = run.resolve()?;
            let smoothed = smooth_tracks(&io::load_tracks(&tracks)?, &cfg.smoothing)?;
            io::write_tracks(&smoothed, &out)?;
        }
        Command::EvalPcp {
            pred,
            gt,
            skeleton,
            table,
            run,
        } => {
            let cfg = run.resolve()?;
            let skeleton = match skeleton {
                Some(path) => io::load_skeleton(&path)?,
                None => mvpose3d::SkeletonDef::body14(),
            };
            let pred = io::load_tracks(&pred)?;
            let gt = io::load_tracks(&gt)?;
            let frames: Vec<usize> = frame_span(&gt).map_or_else(Vec::new, |(a, b)| (a..=b).collect());
            let report = pipeline::evaluate_pcp(&pred, &gt, &frames, &skeleton, cfg.alpha)?;
            if table {
                print!("{}", report.table());
            } else {
                print_json(&report);
            }
        }
        Command::EvalMota { pred, gt, run } => {
            let cfg = run.resolve()?;
            let report = mota_score(&io::load_tracks(&pred)?, &io::load_tracks(&gt)?, cfg.match_threshold);
            print_json(&report);
        }
        Command::Synth { out, scene } => {
            let spec = scene.resolve()?;
            let scene = generate_scene(&spec)?;
            let manifest = write_scene(&scene, &out)?;
            println!("{}", manifest.display());
        }
        Command::SweepSigma {
            manifest,
            sigmas,
            json,
            run,
        } => {
            let cfg = run.resolve()?;
            let rows = sweep_sigma(&Dataset::load(&manifest)?, &cfg, &sigmas)?;
            if json {
                print_json(&rows);
            } else {
                println!("sigma\tua\tla\tul\tll\tavg");
                for row in rows {
                    let rate = |c| row.pcp.per_class.get(&c).copied().unwrap_or(f64::NAN);
                    use mvpose3d::LimbClass::*;
                    println!(
                        "{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
                        row.sigma,
                        rate(UpperArm),
                        rate(LowerArm),
                        rate(UpperLeg),
                        rate(LowerLeg),
                        row.pcp.average
                    );
                }
            }
        }
        Command::PermuteCameras { manifest, json, run } => {
            let cfg = run.resolve()?;
            let study = permute_cameras(&Dataset::load(&manifest)?, &cfg)?;
            if json {
                print_json(&study);
            } else {
                println!("order\tpcp_avg\tposes");
                for row in &study.rows {
                    let order: Vec<String> = row.order.iter().map(ToString::to_string).collect();
                    println!("{}\t{:.4}\t{}", order.join(","), row.pcp_average, row.poses);
                }
                println!("# mean {:.4} min {:.4} max {:.4}", study.mean, study.min, study.max);
            }
        }
    }
    Ok(())
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Io | ErrorKind::Schema => 2,
        ErrorKind::Geometry => 3,
        ErrorKind::Config => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.kind();
            let body = serde_json::json!({ "error": kind, "message": e.to_string() });
            eprintln!("{body}");
            ExitCode::from(exit_code(kind))
        }
    }
}
