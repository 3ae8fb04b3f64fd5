//! JSON file formats: calibration, per-frame detections, skeletons, 3D pose
//! sequences, tracks and the dataset manifest. Paths ending in `.gz` are
//! read and written through gzip.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use nalgebra::{Matrix3, Point2, Point3, Vector3};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::association::{Joint2, Pose2D, Pose3D};
use crate::geometry::{Camera, CameraRig, GeometryError};
use crate::metrics::{Limb, LimbClass, SkeletonDef};
use crate::tracking::Track;

pub const MANIFEST_VERSION: &str = "mvpose3d/1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}{}: {message}", location(.line, .column))]
    Schema {
        path: PathBuf,
        line: Option<usize>,
        column: Option<usize>,
        message: String,
    },
    #[error("{path}: referenced file does not exist")]
    Missing { path: PathBuf },
    #[error("{path}: {source}")]
    Calibration {
        path: PathBuf,
        #[source]
        source: GeometryError,
    },
}

fn location(line: &Option<usize>, column: &Option<usize>) -> String {
    match (line, column) {
        (Some(l), Some(c)) => format!(":{l}:{c}"),
        (Some(l), None) => format!(":{l}"),
        _ => String::new(),
    }
}

impl IoError {
    fn schema(path: &Path, message: impl Into<String>) -> Self {
        IoError::Schema {
            path: path.to_path_buf(),
            line: None,
            column: None,
            message: message.into(),
        }
    }
}

fn is_gzip(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

fn read_text(path: &Path) -> Result<String, IoError> {
    let io_err = |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut text = String::new();
    if is_gzip(path) {
        GzDecoder::new(BufReader::new(file)).read_to_string(&mut text).map_err(io_err)?;
    } else {
        BufReader::new(file).read_to_string(&mut text).map_err(io_err)?;
    }
    Ok(text)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| IoError::Schema {
        path: path.to_path_buf(),
        line: Some(e.line()),
        column: Some(e.column()),
        message: e.to_string(),
    })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let io_err = |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err)?;
    }
    let file = File::create(path).map_err(io_err)?;
    if is_gzip(path) {
        let mut enc = GzEncoder::new(BufWriter::new(file), Compression::default());
        enc.write_all(bytes).map_err(io_err)?;
        enc.finish().map_err(io_err)?.flush().map_err(io_err)?;
    } else {
        let mut w = BufWriter::new(file);
        w.write_all(bytes).map_err(io_err)?;
        w.flush().map_err(io_err)?;
    }
    Ok(())
}

fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec(value).expect("in-memory serialization cannot fail");
    bytes.push(b'\n');
    bytes
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    write_bytes(path, &to_json_bytes(value))
}

// ---------------------------------------------------------------- calibration

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub id: usize,
    #[serde(rename = "K")]
    pub k: [[f64; 3]; 3],
    #[serde(rename = "R")]
    pub r: [[f64; 3]; 3],
    pub t: [f64; 3],
    pub width: u32,
    pub height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<Vec<f64>>,
}

fn matrix_from_rows(rows: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|r, c| rows[r][c])
}

fn rows_from_matrix(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)]))
}

impl CalibrationFile {
    pub fn from_camera(cam: &Camera) -> Self {
        let (width, height) = cam.image_size();
        Self {
            id: cam.id(),
            k: rows_from_matrix(cam.intrinsics()),
            r: rows_from_matrix(cam.rotation()),
            t: [cam.translation().x, cam.translation().y, cam.translation().z],
            width,
            height,
            dist: None,
        }
    }

    pub fn to_camera(&self) -> Result<Camera, GeometryError> {
        Camera::new(
            self.id,
            matrix_from_rows(&self.k),
            matrix_from_rows(&self.r),
            Vector3::from(self.t),
            (self.width, self.height),
        )
    }
}

pub fn load_camera(path: &Path) -> Result<Camera, IoError> {
    let file: CalibrationFile = read_json(path)?;
    if file.dist.as_ref().is_some_and(|d| d.iter().any(|&c| c != 0.0)) {
        log::warn!(
            "{}: distortion coefficients are ignored; detections must be undistorted",
            path.display()
        );
    }
    file.to_camera().map_err(|source| IoError::Calibration {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_camera(cam: &Camera, path: &Path) -> Result<(), IoError> {
    write_json(path, &CalibrationFile::from_camera(cam))
}

// ------------------------------------------------------------------ skeleton

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SkeletonFile {
    joints: Vec<String>,
    limbs: Vec<(usize, usize, LimbClass)>,
}

pub fn load_skeleton(path: &Path) -> Result<SkeletonDef, IoError> {
    let file: SkeletonFile = read_json(path)?;
    let limbs = file.limbs.into_iter().map(|(a, b, class)| Limb { a, b, class }).collect();
    SkeletonDef::new(file.joints, limbs).map_err(|e| IoError::schema(path, e.to_string()))
}

pub fn write_skeleton(skeleton: &SkeletonDef, path: &Path) -> Result<(), IoError> {
    let file = SkeletonFile {
        joints: skeleton.joint_names.clone(),
        limbs: skeleton.limbs.iter().map(|l| (l.a, l.b, l.class)).collect(),
    };
    write_json(path, &file)
}

// ---------------------------------------------------------------- detections

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DetectionPose {
    joints: Vec<Option<[f64; 3]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DetectionFile {
    frame: usize,
    camera: usize,
    poses: Vec<DetectionPose>,
}

/// Reads one camera's detections for one frame and validates them against
/// the expected frame, camera and joint count.
pub fn load_detection_file(
    path: &Path,
    frame: usize,
    camera: usize,
    joint_count: usize,
) -> Result<Vec<Pose2D>, IoError> {
    let file: DetectionFile = read_json(path)?;
    if file.frame != frame || file.camera != camera {
        return Err(IoError::schema(
            path,
            format!(
                "expected frame {frame} camera {camera}, file says frame {} camera {}",
                file.frame, file.camera
            ),
        ));
    }
    let mut poses = Vec::with_capacity(file.poses.len());
    for (k, pose) in file.poses.into_iter().enumerate() {
        if pose.joints.len() != joint_count {
            return Err(IoError::schema(
                path,
                format!("pose {k} has {} joints, expected {joint_count}", pose.joints.len()),
            ));
        }
        let mut joints = Vec::with_capacity(joint_count);
        for (j, entry) in pose.joints.into_iter().enumerate() {
            joints.push(match entry {
                None => None,
                Some([x, y, c]) => {
                    if !(x.is_finite() && y.is_finite()) || !(0.0..=1.0).contains(&c) {
                        return Err(IoError::schema(path, format!("pose {k} joint {j}: invalid entry [{x}, {y}, {c}]")));
                    }
                    Some(Joint2 {
                        position: Point2::new(x, y),
                        confidence: c,
                    })
                }
            });
        }
        if joints.iter().all(Option::is_none) {
            log::warn!("{}: pose {k} has no joints, skipped", path.display());
            continue;
        }
        poses.push(Pose2D::new(camera, joints));
    }
    Ok(poses)
}

pub fn write_detection_file(path: &Path, frame: usize, camera: usize, poses: &[Pose2D]) -> Result<(), IoError> {
    let file = DetectionFile {
        frame,
        camera,
        poses: poses
            .iter()
            .map(|p| DetectionPose {
                joints: p
                    .joints
                    .iter()
                    .map(|j| j.map(|j| [j.position.x, j.position.y, j.confidence]))
                    .collect(),
            })
            .collect(),
    };
    write_json(path, &file)
}

// -------------------------------------------------------------- 3D poses/tracks

type JointTriple = Option<[f64; 3]>;

fn encode_pose(p: &Pose3D) -> Vec<JointTriple> {
    p.joints.iter().map(|j| j.map(|q| [q.x, q.y, q.z])).collect()
}

fn decode_pose(path: &Path, joints: Vec<JointTriple>) -> Result<Pose3D, IoError> {
    let mut out = Vec::with_capacity(joints.len());
    for entry in joints {
        out.push(match entry {
            None => None,
            Some(v) if v.iter().all(|c| c.is_finite()) => Some(Point3::from(v)),
            Some(v) => return Err(IoError::schema(path, format!("non-finite joint {v:?}"))),
        });
    }
    Ok(Pose3D::from_joints(out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TrackEntry {
    id: u64,
    frames: Vec<usize>,
    poses: Vec<Vec<JointTriple>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TrackFile {
    tracks: Vec<TrackEntry>,
}

fn track_file(tracks: &[Track]) -> TrackFile {
    TrackFile {
        tracks: tracks
            .iter()
            .map(|t| TrackEntry {
                id: t.id,
                frames: t.frames().collect(),
                poses: t.poses.values().map(encode_pose).collect(),
            })
            .collect(),
    }
}

/// Serialized track file contents.
pub fn tracks_to_bytes(tracks: &[Track]) -> Vec<u8> {
    to_json_bytes(&track_file(tracks))
}

pub fn write_tracks(tracks: &[Track], path: &Path) -> Result<(), IoError> {
    write_bytes(path, &tracks_to_bytes(tracks))
}

pub fn load_tracks(path: &Path) -> Result<Vec<Track>, IoError> {
    let file: TrackFile = read_json(path)?;
    let mut tracks = Vec::with_capacity(file.tracks.len());
    for entry in file.tracks {
        if entry.frames.len() != entry.poses.len() {
            return Err(IoError::schema(
                path,
                format!("track {}: {} frames but {} poses", entry.id, entry.frames.len(), entry.poses.len()),
            ));
        }
        if entry.frames.is_empty() {
            return Err(IoError::schema(path, format!("track {} is empty", entry.id)));
        }
        if entry.frames.windows(2).any(|w| w[0] >= w[1]) {
            return Err(IoError::schema(path, format!("track {}: frames not strictly increasing", entry.id)));
        }
        let mut poses = BTreeMap::new();
        for (frame, joints) in entry.frames.into_iter().zip(entry.poses) {
            poses.insert(frame, decode_pose(path, joints)?);
        }
        tracks.push(Track { id: entry.id, poses });
    }
    Ok(tracks)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PoseFrame {
    frame: usize,
    poses: Vec<Vec<JointTriple>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PoseSequenceFile {
    frames: Vec<PoseFrame>,
}

/// Per-frame untracked 3D poses: `{"frames": [{"frame": f, "poses": [...]}]}`.
pub fn write_pose_sequence(frames: &[(usize, Vec<Pose3D>)], path: &Path) -> Result<(), IoError> {
    let file = PoseSequenceFile {
        frames: frames
            .iter()
            .map(|(frame, poses)| PoseFrame {
                frame: *frame,
                poses: poses.iter().map(encode_pose).collect(),
            })
            .collect(),
    };
    write_json(path, &file)
}

pub fn load_pose_sequence(path: &Path) -> Result<Vec<(usize, Vec<Pose3D>)>, IoError> {
    let file: PoseSequenceFile = read_json(path)?;
    if file.frames.windows(2).any(|w| w[0].frame >= w[1].frame) {
        return Err(IoError::schema(path, "frames not strictly increasing"));
    }
    file.frames
        .into_iter()
        .map(|f| {
            let poses = f.poses.into_iter().map(|p| decode_pose(path, p)).collect::<Result<_, _>>()?;
            Ok((f.frame, poses))
        })
        .collect()
}

// ------------------------------------------------------------------ manifest

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameRange {
    pub first: usize,
    /// Inclusive.
    pub last: usize,
}

impl FrameRange {
    pub fn iter(&self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.last
    }

    pub fn len(&self) -> usize {
        self.last + 1 - self.first
    }

    pub fn is_empty(&self) -> bool {
        self.last < self.first
    }
}

/// On-disk manifest. Relative paths are resolved against the manifest's
/// directory. `detections` is a pattern containing `{frame}` and
/// `{camera}` placeholders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub version: String,
    pub cameras: Vec<usize>,
    pub calibration: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skeleton: Option<String>,
    pub detections: String,
    pub frames: FrameRange,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub path: PathBuf,
    pub cameras: Vec<usize>,
    pub calibration: Vec<PathBuf>,
    pub skeleton: Option<PathBuf>,
    pub detection_pattern: String,
    pub frames: FrameRange,
    pub ground_truth: Option<PathBuf>,
}

impl Manifest {
    pub fn detection_path(&self, frame: usize, camera: usize) -> PathBuf {
        let rel = self
            .detection_pattern
            .replace("{frame}", &frame.to_string())
            .replace("{camera}", &camera.to_string());
        self.base_dir().join(rel)
    }

    fn base_dir(&self) -> PathBuf {
        self.path.parent().map(Path::to_path_buf).unwrap_or_default()
    }
}

pub fn load_manifest(path: &Path) -> Result<Manifest, IoError> {
    let file: ManifestFile = read_json(path)?;
    if file.version != MANIFEST_VERSION {
        return Err(IoError::schema(
            path,
            format!("unsupported version {:?}, expected {MANIFEST_VERSION:?}", file.version),
        ));
    }
    if file.cameras.len() != file.calibration.len() {
        return Err(IoError::schema(
            path,
            format!(
                "manifest lists {} cameras but {} calibration files",
                file.cameras.len(),
                file.calibration.len()
            ),
        ));
    }
    if file.cameras.is_empty() {
        return Err(IoError::schema(path, "no cameras"));
    }
    if file.frames.is_empty() {
        return Err(IoError::schema(path, "empty frame range"));
    }
    if !file.detections.contains("{frame}") || !file.detections.contains("{camera}") {
        return Err(IoError::schema(path, "detections pattern needs {frame} and {camera}"));
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let resolve = |p: &str| -> Result<PathBuf, IoError> {
        let full = base.join(p);
        if full.exists() {
            Ok(full)
        } else {
            Err(IoError::Missing { path: full })
        }
    };
    Ok(Manifest {
        path: path.to_path_buf(),
        cameras: file.cameras,
        calibration: file.calibration.iter().map(|p| resolve(p)).collect::<Result<_, _>>()?,
        skeleton: file.skeleton.as_deref().map(resolve).transpose()?,
        detection_pattern: file.detections,
        frames: file.frames,
        ground_truth: file.ground_truth.as_deref().map(resolve).transpose()?,
    })
}

pub fn write_manifest(file: &ManifestFile, path: &Path) -> Result<(), IoError> {
    write_bytes(path, &serde_json::to_vec_pretty(file).expect("in-memory serialization cannot fail"))
}

/// Loads every calibration file and checks the ids against the manifest.
pub fn load_rig(manifest: &Manifest) -> Result<CameraRig, IoError> {
    let mut cameras = Vec::with_capacity(manifest.cameras.len());
    for (&id, path) in manifest.cameras.iter().zip(&manifest.calibration) {
        let cam = load_camera(path)?;
        if cam.id() != id {
            return Err(IoError::schema(path, format!("calibration id {} but manifest expects {id}", cam.id())));
        }
        cameras.push(cam);
    }
    CameraRig::new(cameras).map_err(|source| IoError::Calibration {
        path: manifest.path.clone(),
        source,
    })
}

pub fn load_manifest_skeleton(manifest: &Manifest) -> Result<SkeletonDef, IoError> {
    manifest.skeleton.as_deref().map_or_else(|| Ok(SkeletonDef::body14()), load_skeleton)
}

/// Detections of one frame, one list per manifest camera.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDetections {
    pub frame: usize,
    pub detections: Vec<Vec<Pose2D>>,
    /// Detection files that did not exist; their cameras contribute nothing.
    pub missing: Vec<PathBuf>,
}

pub fn load_detections(manifest: &Manifest, frame: usize, joint_count: usize) -> Result<FrameDetections, IoError> {
    let mut detections = Vec::with_capacity(manifest.cameras.len());
    let mut missing = Vec::new();
    for &camera in &manifest.cameras {
        let path = manifest.detection_path(frame, camera);
        if !path.exists() {
            missing.push(path);
            detections.push(Vec::new());
            continue;
        }
        detections.push(load_detection_file(&path, frame, camera, joint_count)?);
    }
    Ok(FrameDetections {
        frame,
        detections,
        missing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_round_trip() {
        let cam = Camera::look_at(
            3,
            Matrix3::new(400.0, 0.0, 320.0, 0.0, 400.0, 240.0, 0.0, 0.0, 1.0),
            Point3::new(5000.0, 100.0, 2500.0),
            Point3::new(0.0, 0.0, 1000.0),
            Vector3::z(),
            (640, 480),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cam.json.gz");
        write_camera(&cam, &path).unwrap();
        assert_eq!(load_camera(&path).unwrap(), cam);
    }

    #[test]
    fn detection_joint_count_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.json");
        std::fs::write(&path, r#"{"frame": 0, "camera": 1, "poses": [{"joints": [[1, 2, 0.5], null]}]}"#).unwrap();
        assert_eq!(load_detection_file(&path, 0, 1, 2).unwrap().len(), 1);
        match load_detection_file(&path, 0, 1, 14) {
            Err(IoError::Schema { path: p, message, .. }) => {
                assert_eq!(p, path);
                assert!(message.contains("14"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(load_detection_file(&path, 1, 1, 2).is_err());
    }

    #[test]
    fn syntax_errors_carry_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, "{\n  \"tracks\": [\n    oops\n  ]\n}").unwrap();
        match load_tracks(&path) {
            Err(IoError::Schema { line: Some(3), .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
