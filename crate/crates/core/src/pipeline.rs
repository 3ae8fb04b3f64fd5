//! End-to-end composition: per-frame association and triangulation, tracking,
//! optional smoothing and evaluation, plus the σ sweep and camera-order
//! experiments.

use std::path::{Path, PathBuf};

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::association::{estimate_frame, AssociationConfig, AssociationError, Pose3D};
use crate::geometry::{CameraRig, GeometryError};
use crate::io::{self, FrameDetections, FrameRange, IoError, ManifestFile, MANIFEST_VERSION};
use crate::metrics::{frames_from_tracks, mota_score, pcp_score, MetricsError, MotaReport, PcpReport, SkeletonDef};
use crate::smoothing::{fill_and_smooth, SmoothingConfig, SmoothingConfigError};
use crate::synth::{Scene, SynthError};
use crate::tracking::{track_sequence, Track, TrackingConfig, TrackingError};

/// Largest camera count accepted by [`permute_cameras`] (7! = 5040 runs).
pub const MAX_PERMUTED_CAMERAS: usize = 7;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Association(#[from] AssociationError),
    #[error(transparent)]
    Tracking(#[from] TrackingError),
    #[error(transparent)]
    Smoothing(#[from] SmoothingConfigError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{0}")]
    Config(String),
}

/// Coarse error class, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Io,
    Schema,
    Geometry,
    Config,
}

impl PipelineError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            PipelineError::Io(IoError::Io { .. }) => ErrorKind::Io,
            PipelineError::Io(IoError::Schema { .. } | IoError::Missing { .. }) => ErrorKind::Schema,
            PipelineError::Io(IoError::Calibration { source, .. }) => geometry_kind(source),
            PipelineError::Association(AssociationError::Geometry(e)) => geometry_kind(e),
            PipelineError::Association(AssociationError::Config(_)) => ErrorKind::Config,
            PipelineError::Association(_) => ErrorKind::Schema,
            PipelineError::Synth(SynthError::Geometry(e)) => geometry_kind(e),
            PipelineError::Metrics(MetricsError::SkeletonMismatch { .. } | MetricsError::FrameCount { .. }) => {
                ErrorKind::Schema
            }
            PipelineError::Tracking(TrackingError::FrameOrder { .. }) => ErrorKind::Schema,
            _ => ErrorKind::Config,
        }
    }
}

fn geometry_kind(e: &GeometryError) -> ErrorKind {
    match e {
        GeometryError::InvalidCamera { .. } | GeometryError::UnknownCamera(_) => ErrorKind::Config,
        _ => ErrorKind::Geometry,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub association: AssociationConfig,
    pub tracking: TrackingConfig,
    pub smoothing: SmoothingConfig,
    /// Fill and smooth tracks after tracking.
    pub smooth: bool,
    /// PCP threshold as a fraction of limb length.
    pub alpha: f64,
    /// MOTA centroid match threshold, mm.
    pub match_threshold: f64,
    /// Estimation threads; `None` uses the available parallelism.
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            association: AssociationConfig::default(),
            tracking: TrackingConfig::default(),
            smoothing: SmoothingConfig::default(),
            smooth: true,
            alpha: 0.5,
            match_threshold: 500.0,
            workers: None,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| IoError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| {
            PipelineError::Io(IoError::Schema {
                path: path.to_path_buf(),
                line: Some(e.line()),
                column: Some(e.column()),
                message: e.to_string(),
            })
        })
    }

    /// Checks everything that does not depend on the camera rig.
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.tracking.validate()?;
        self.smoothing.validate()?;
        if !(self.alpha > 0.0) {
            return Err(PipelineError::Config(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.match_threshold > 0.0) {
            return Err(PipelineError::Config(format!(
                "match_threshold must be > 0, got {}",
                self.match_threshold
            )));
        }
        if self.workers == Some(0) {
            return Err(PipelineError::Config("workers must be >= 1".into()));
        }
        Ok(())
    }

    pub fn validate_for(&self, rig: &CameraRig) -> Result<(), PipelineError> {
        self.validate()?;
        self.association.validate(rig)?;
        Ok(())
    }
}

/// Everything the pipeline consumes: calibrated rig, detections for each
/// frame (one list per rig camera, in rig order) and optional ground truth.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub rig: CameraRig,
    pub skeleton: SkeletonDef,
    pub frames: Vec<FrameDetections>,
    pub ground_truth: Option<Vec<Track>>,
}

impl Dataset {
    pub fn load(manifest_path: &Path) -> Result<Self, PipelineError> {
        let manifest = io::load_manifest(manifest_path)?;
        let rig = io::load_rig(&manifest)?;
        let skeleton = io::load_manifest_skeleton(&manifest)?;
        let frames = manifest
            .frames
            .iter()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&f| io::load_detections(&manifest, f, skeleton.joint_count()))
            .collect::<Result<Vec<_>, _>>()?;
        for path in frames.iter().flat_map(|f| &f.missing) {
            log::warn!("missing detection file {}, treating as empty", path.display());
        }
        let ground_truth = manifest.ground_truth.as_deref().map(io::load_tracks).transpose()?;
        Ok(Self {
            rig,
            skeleton,
            frames,
            ground_truth,
        })
    }

    pub fn from_scene(scene: &Scene) -> Self {
        Self {
            rig: scene.rig.clone(),
            skeleton: scene.skeleton.clone(),
            frames: scene
                .frames
                .iter()
                .map(|f| FrameDetections {
                    frame: f.frame,
                    detections: f.detections.clone(),
                    missing: Vec::new(),
                })
                .collect(),
            ground_truth: Some(scene.gt_tracks.clone()),
        }
    }

    pub fn frame_indices(&self) -> Vec<usize> {
        self.frames.iter().map(|f| f.frame).collect()
    }

    pub fn missing_files(&self) -> Vec<PathBuf> {
        self.frames.iter().flat_map(|f| f.missing.iter().cloned()).collect()
    }

    fn require_ground_truth(&self) -> Result<&[Track], PipelineError> {
        self.ground_truth
            .as_deref()
            .ok_or_else(|| PipelineError::Config("this command needs ground truth in the manifest".into()))
    }
}

/// Writes a synthetic scene as a manifest-described dataset under `dir`
/// and returns the manifest path.
pub fn write_scene(scene: &Scene, dir: &Path) -> Result<PathBuf, PipelineError> {
    let mut calibration = Vec::new();
    for cam in scene.rig.cameras() {
        let rel = format!("calibration/cam{}.json", cam.id());
        io::write_camera(cam, &dir.join(&rel))?;
        calibration.push(rel);
    }
    io::write_skeleton(&scene.skeleton, &dir.join("skeleton.json"))?;
    let pattern = "detections/{frame}/cam{camera}.json";
    for frame in &scene.frames {
        for (cam, poses) in scene.rig.cameras().iter().zip(&frame.detections) {
            let rel = pattern
                .replace("{frame}", &frame.frame.to_string())
                .replace("{camera}", &cam.id().to_string());
            io::write_detection_file(&dir.join(rel), frame.frame, cam.id(), poses)?;
        }
    }
    io::write_tracks(&scene.gt_tracks, &dir.join("ground_truth.json"))?;
    let manifest = ManifestFile {
        version: MANIFEST_VERSION.to_string(),
        cameras: scene.rig.ids(),
        calibration,
        skeleton: Some("skeleton.json".into()),
        detections: pattern.into(),
        frames: FrameRange {
            first: 0,
            last: scene.frames.len() - 1,
        },
        ground_truth: Some("ground_truth.json".into()),
    };
    let path = dir.join("manifest.json");
    io::write_manifest(&manifest, &path)?;
    Ok(path)
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, PipelineError> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| PipelineError::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Associates and triangulates every frame, in parallel across frames.
pub fn estimate_poses(
    dataset: &Dataset,
    cfg: &AssociationConfig,
    workers: Option<usize>,
) -> Result<Vec<(usize, Vec<Pose3D>)>, PipelineError> {
    cfg.validate(&dataset.rig)?;
    with_workers(workers, || {
        dataset
            .frames
            .par_iter()
            .map(|f| Ok((f.frame, estimate_frame(&f.detections, &dataset.rig, cfg)?)))
            .collect::<Result<Vec<_>, PipelineError>>()
    })?
}

pub fn smooth_tracks(tracks: &[Track], cfg: &SmoothingConfig) -> Result<Vec<Track>, PipelineError> {
    cfg.validate()?;
    Ok(tracks.iter().map(|t| fill_and_smooth(t, cfg)).collect())
}

/// PCP of tracks over the given frames against ground-truth tracks.
pub fn evaluate_pcp(
    tracks: &[Track],
    ground_truth: &[Track],
    frames: &[usize],
    skeleton: &SkeletonDef,
    alpha: f64,
) -> Result<PcpReport, PipelineError> {
    let pred: Vec<Vec<Pose3D>> = frames_from_tracks(tracks, frames.iter().copied())
        .into_iter()
        .map(|f| f.into_iter().map(|(_, p)| p).collect())
        .collect();
    let gt = frames_from_tracks(ground_truth, frames.iter().copied());
    Ok(pcp_score(&pred, &gt, skeleton, alpha)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub poses: Vec<(usize, Vec<Pose3D>)>,
    /// Tracker output before smoothing.
    pub raw_tracks: Vec<Track>,
    /// Final tracks: smoothed when enabled, otherwise equal to `raw_tracks`.
    pub tracks: Vec<Track>,
    pub report: PipelineReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub frames: usize,
    pub tracks: usize,
    pub smoothed: bool,
    pub missing_files: Vec<PathBuf>,
    pub pcp: Option<PcpReport>,
    pub mota: Option<MotaReport>,
}

pub fn run_pipeline(dataset: &Dataset, cfg: &RunConfig) -> Result<PipelineOutput, PipelineError> {
    cfg.validate_for(&dataset.rig)?;
    let poses = estimate_poses(dataset, &cfg.association, cfg.workers)?;
    let raw_tracks = track_sequence(poses.iter().cloned(), &cfg.tracking)?;
    let tracks = if cfg.smooth {
        smooth_tracks(&raw_tracks, &cfg.smoothing)?
    } else {
        raw_tracks.clone()
    };
    log::info!("{} frames, {} tracks", poses.len(), tracks.len());

    let (pcp, mota) = match &dataset.ground_truth {
        Some(gt) => (
            Some(evaluate_pcp(&tracks, gt, &dataset.frame_indices(), &dataset.skeleton, cfg.alpha)?),
            Some(mota_score(&tracks, gt, cfg.match_threshold)),
        ),
        None => (None, None),
    };
    let report = PipelineReport {
        frames: poses.len(),
        tracks: tracks.len(),
        smoothed: cfg.smooth,
        missing_files: dataset.missing_files(),
        pcp,
        mota,
    };
    Ok(PipelineOutput {
        poses,
        raw_tracks,
        tracks,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaRow {
    pub sigma: f64,
    pub pcp: PcpReport,
}

/// PCP of the smoothed tracks for each σ. Association and tracking run once.
pub fn sweep_sigma(dataset: &Dataset, cfg: &RunConfig, sigmas: &[f64]) -> Result<Vec<SigmaRow>, PipelineError> {
    cfg.validate_for(&dataset.rig)?;
    let gt = dataset.require_ground_truth()?;
    let poses = estimate_poses(dataset, &cfg.association, cfg.workers)?;
    let raw = track_sequence(poses, &cfg.tracking)?;
    let frames = dataset.frame_indices();
    sigmas
        .iter()
        .map(|&sigma| {
            let smoothing = SmoothingConfig {
                sigma,
                ..cfg.smoothing.clone()
            };
            let tracks = smooth_tracks(&raw, &smoothing)?;
            let pcp = evaluate_pcp(&tracks, gt, &frames, &dataset.skeleton, cfg.alpha)?;
            Ok(SigmaRow { sigma, pcp })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationRow {
    pub order: Vec<usize>,
    pub pcp_average: f64,
    pub poses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationStudy {
    pub rows: Vec<PermutationRow>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Runs the full pipeline once per camera order (all permutations, in
/// lexicographic order of the rig's camera ids).
pub fn permute_cameras(dataset: &Dataset, cfg: &RunConfig) -> Result<PermutationStudy, PipelineError> {
    let n = dataset.rig.len();
    if n > MAX_PERMUTED_CAMERAS {
        return Err(PipelineError::Config(format!(
            "{n} cameras give too many orders; at most {MAX_PERMUTED_CAMERAS} are supported"
        )));
    }
    dataset.require_ground_truth()?;
    let mut ids = dataset.rig.ids();
    ids.sort_unstable();
    let mut rows = Vec::new();
    for order in ids.iter().copied().permutations(n) {
        let mut run = cfg.clone();
        run.association.camera_order = Some(order.clone());
        let out = run_pipeline(dataset, &run)?;
        rows.push(PermutationRow {
            order,
            pcp_average: out.report.pcp.as_ref().map_or(0.0, |p| p.average),
            poses: out.poses.iter().map(|(_, p)| p.len()).sum(),
        });
    }
    let values: Vec<f64> = rows.iter().map(|r| r.pcp_average).collect();
    Ok(PermutationStudy {
        mean: values.iter().sum::<f64>() / values.len() as f64,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_scene, MotionModel, SceneSpec};

    fn scene() -> Scene {
        generate_scene(&SceneSpec {
            n_people: 3,
            n_cameras: 4,
            n_frames: 12,
            motion: MotionModel::LinearWalk,
            rng_seed: 5,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn noise_free_pipeline_is_perfect() {
        let out = run_pipeline(&Dataset::from_scene(&scene()), &RunConfig::default()).unwrap();
        assert_eq!(out.tracks.len(), 3);
        let mota = out.report.mota.unwrap();
        assert_eq!(mota.mota, 1.0);
        assert_eq!(mota.id_switches, 0);
        assert!(out.report.pcp.unwrap().average > 0.999);
    }

    #[test]
    fn disk_round_trip_matches_memory() {
        let scene = scene();
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_scene(&scene, dir.path()).unwrap();
        let loaded = Dataset::load(&manifest).unwrap();
        let memory = Dataset::from_scene(&scene);
        assert_eq!(loaded.frames, memory.frames);
        assert_eq!(loaded.ground_truth, memory.ground_truth);
        assert_eq!(loaded.rig.cameras(), memory.rig.cameras());
    }

    #[test]
    fn smoothing_switch_leaves_tracking_alone() {
        let data = Dataset::from_scene(&scene());
        let on = run_pipeline(&data, &RunConfig::default()).unwrap();
        let off = run_pipeline(
            &data,
            &RunConfig {
                smooth: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(on.raw_tracks, off.raw_tracks);
        assert_eq!(off.tracks, off.raw_tracks);
    }

    #[test]
    fn config_errors() {
        let bad = RunConfig {
            alpha: 0.0,
            ..Default::default()
        };
        assert_eq!(bad.validate().unwrap_err().kind(), ErrorKind::Config);
        let parsed: Result<RunConfig, _> = serde_json::from_str(r#"{"tracking": {"tau": 150}, "smooth": false}"#);
        let parsed = parsed.unwrap();
        assert_eq!(parsed.tracking.tau, 150.0);
        assert_eq!(parsed.smoothing.sigma, 2.0);
        assert!(serde_json::from_str::<RunConfig>(r#"{"tua": 1}"#).is_err());
    }
}
