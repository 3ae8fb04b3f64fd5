//! Greedy cross-view association of 2D pose detections into person
//! hypotheses, and triangulation of those hypotheses into 3D poses.
//!
//! Cameras are visited in a fixed order. The detections of the first camera
//! seed one hypothesis each. Every later camera is matched against the
//! current hypotheses with a bipartite assignment on the mean epipolar
//! distance; matches cheaper than `theta` join their hypothesis and all
//! other detections open a new one. Hypotheses that end with a single view
//! cannot be triangulated and are dropped.

use nalgebra::{Point2, Point3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::{solve_bipartite, CostMatrix, FORBIDDEN};
use crate::geometry::{epipolar_joint_distance, triangulate_joint, CameraRig, EpipolarMetric, GeometryError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssociationError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid association config: {0}")]
    Config(String),
    #[error("detections cover {got} cameras but the rig has {expected}")]
    CameraCount { expected: usize, got: usize },
    #[error("detection list for camera {expected} contains a pose from camera {got}")]
    CameraMismatch { expected: usize, got: usize },
    #[error("pose has {got} joints, expected {expected}")]
    JointCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Joint2 {
    pub position: Point2<f64>,
    pub confidence: f64,
}

/// One detected person in one camera.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose2D {
    pub camera_id: usize,
    pub joints: Vec<Option<Joint2>>,
}

impl Pose2D {
    pub fn new(camera_id: usize, joints: Vec<Option<Joint2>>) -> Self {
        Self { camera_id, joints }
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn present_count(&self) -> usize {
        self.joints.iter().flatten().count()
    }

    pub fn joint(&self, index: usize) -> Option<&Joint2> {
        self.joints.get(index).and_then(Option::as_ref)
    }
}

/// A Pose2D together with its position in the camera's detection list.
#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub detection: usize,
    pub pose: Pose2D,
}

/// Cross-view group of detections believed to be one person. Camera ids of
/// the members are pairwise distinct.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PersonHypothesis {
    pub members: Vec<Member>,
}

impl PersonHypothesis {
    pub fn singleton(detection: usize, pose: Pose2D) -> Self {
        Self {
            members: vec![Member { detection, pose }],
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains_camera(&self, camera_id: usize) -> bool {
        self.members.iter().any(|m| m.pose.camera_id == camera_id)
    }

    /// `(camera_id, detection index)` of every member, sorted.
    pub fn sources(&self) -> Vec<(usize, usize)> {
        let mut s: Vec<_> = self.members.iter().map(|m| (m.pose.camera_id, m.detection)).collect();
        s.sort_unstable();
        s
    }
}

/// 3D pose in world millimeters.
///
/// `source_views[j]` counts the cameras a joint was triangulated from; it is
/// zero for joints that did not come from triangulation (ground truth, file
/// input, temporal fill-in).
#[derive(Debug, Clone, PartialEq)]
pub struct Pose3D {
    pub joints: Vec<Option<Point3<f64>>>,
    pub source_views: Vec<usize>,
}

impl Pose3D {
    pub fn from_joints(joints: Vec<Option<Point3<f64>>>) -> Self {
        let source_views = vec![0; joints.len()];
        Self { joints, source_views }
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn present_count(&self) -> usize {
        self.joints.iter().flatten().count()
    }

    pub fn is_empty(&self) -> bool {
        self.present_count() == 0
    }

    /// Mean of the present joints.
    pub fn centroid(&self) -> Option<Point3<f64>> {
        let present: Vec<_> = self.joints.iter().flatten().collect();
        if present.is_empty() {
            return None;
        }
        let sum = present.iter().fold(nalgebra::Vector3::zeros(), |acc, p| acc + p.coords);
        Some(Point3::from(sum / present.len() as f64))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssociationConfig {
    /// Maximum assignment cost (pixels) for a detection to join a
    /// hypothesis.
    pub theta: f64,
    /// Camera ids in processing order; `None` uses the rig order.
    pub camera_order: Option<Vec<usize>>,
    pub metric: EpipolarMetric,
    /// Member pairs sharing fewer joints than this do not contribute to the
    /// cost. 1 follows the unrestricted cost literally.
    pub min_shared_joints: usize,
    /// Weight each joint term by the product of both confidences.
    pub confidence_weighted: bool,
}

impl Default for AssociationConfig {
    fn default() -> Self {
        Self {
            theta: 40.0,
            camera_order: None,
            metric: EpipolarMetric::Geometric,
            min_shared_joints: 3,
            confidence_weighted: false,
        }
    }
}

impl AssociationConfig {
    pub fn validate(&self, rig: &CameraRig) -> Result<(), AssociationError> {
        if !(self.theta > 0.0) {
            return Err(AssociationError::Config(format!("theta must be > 0, got {}", self.theta)));
        }
        if self.min_shared_joints == 0 {
            return Err(AssociationError::Config("min_shared_joints must be >= 1".into()));
        }
        if let Some(order) = &self.camera_order {
            let mut sorted = order.clone();
            sorted.sort_unstable();
            let mut ids = rig.ids();
            ids.sort_unstable();
            if sorted != ids {
                return Err(AssociationError::Config(format!(
                    "camera_order {order:?} is not a permutation of cameras {ids:?}"
                )));
            }
        }
        Ok(())
    }

    fn order(&self, rig: &CameraRig) -> Vec<usize> {
        self.camera_order.clone().unwrap_or_else(|| rig.ids())
    }
}

/// Cost of adding `pose` to `hypothesis`: the mean over members of the mean
/// epipolar distance over the joints both poses share.
///
/// Returns [`FORBIDDEN`] when no member shares enough joints with `pose`.
pub fn assignment_cost(
    pose: &Pose2D,
    hypothesis: &PersonHypothesis,
    rig: &CameraRig,
    cfg: &AssociationConfig,
) -> Result<f64, GeometryError> {
    let mut member_sum = 0.0;
    let mut member_count = 0usize;
    for member in &hypothesis.members {
        let other = &member.pose;
        let f_ij = rig.fundamental(pose.camera_id, other.camera_id)?;
        let f_ji = rig.fundamental(other.camera_id, pose.camera_id)?;
        let mut joint_sum = 0.0;
        let mut weight_sum = 0.0;
        let mut shared = 0usize;
        for (a, b) in pose.joints.iter().zip(&other.joints) {
            let (Some(a), Some(b)) = (a, b) else { continue };
            let d = epipolar_joint_distance(&a.position, &b.position, f_ij, f_ji, cfg.metric);
            if !d.is_finite() {
                continue;
            }
            let w = if cfg.confidence_weighted {
                a.confidence * b.confidence
            } else {
                1.0
            };
            joint_sum += w * d;
            weight_sum += w;
            shared += 1;
        }
        if shared < cfg.min_shared_joints || weight_sum <= 0.0 {
            continue;
        }
        member_sum += joint_sum / weight_sum;
        member_count += 1;
    }
    if member_count == 0 {
        return Ok(FORBIDDEN);
    }
    Ok(member_sum / member_count as f64)
}

fn check_detections(detections: &[Vec<Pose2D>], rig: &CameraRig) -> Result<(), AssociationError> {
    if detections.len() != rig.len() {
        return Err(AssociationError::CameraCount {
            expected: rig.len(),
            got: detections.len(),
        });
    }
    let mut joint_count = None;
    for (cam, poses) in rig.cameras().iter().zip(detections) {
        for pose in poses {
            if pose.camera_id != cam.id() {
                return Err(AssociationError::CameraMismatch {
                    expected: cam.id(),
                    got: pose.camera_id,
                });
            }
            let expected = *joint_count.get_or_insert(pose.joint_count());
            if pose.joint_count() != expected {
                return Err(AssociationError::JointCount {
                    expected,
                    got: pose.joint_count(),
                });
            }
        }
    }
    Ok(())
}

/// Groups the detections of one frame into person hypotheses.
///
/// `detections[n]` holds the poses seen by `rig.cameras()[n]`. Every
/// returned hypothesis has at least two members from distinct cameras; a
/// camera contributes to a hypothesis only through one matching pass, which
/// is what keeps the camera ids distinct.
pub fn associate_views(
    detections: &[Vec<Pose2D>],
    rig: &CameraRig,
    cfg: &AssociationConfig,
) -> Result<Vec<PersonHypothesis>, AssociationError> {
    cfg.validate(rig)?;
    check_detections(detections, rig)?;

    let mut order = cfg.order(rig).into_iter();
    let mut hypotheses: Vec<PersonHypothesis> = Vec::new();
    if let Some(first) = order.next() {
        let poses = &detections[rig.position(first).ok_or(GeometryError::UnknownCamera(first))?];
        hypotheses.extend(poses.iter().enumerate().map(|(k, p)| PersonHypothesis::singleton(k, p.clone())));
    }

    for camera in order {
        let poses = &detections[rig.position(camera).ok_or(GeometryError::UnknownCamera(camera))?];
        if poses.is_empty() {
            continue;
        }
        let mut costs = Vec::with_capacity(poses.len() * hypotheses.len());
        for pose in poses {
            for hypothesis in &hypotheses {
                costs.push(assignment_cost(pose, hypothesis, rig, cfg)?);
            }
        }
        let costs = CostMatrix::new(poses.len(), hypotheses.len(), costs)
            .expect("assignment costs are nonnegative or forbidden");
        let assignment = solve_bipartite(&costs);

        let mut opened = Vec::new();
        for (k, pose) in poses.iter().enumerate() {
            match assignment.col_of(k) {
                Some(m) if costs.get(k, m) < cfg.theta => {
                    hypotheses[m].members.push(Member {
                        detection: k,
                        pose: pose.clone(),
                    });
                }
                _ => opened.push(PersonHypothesis::singleton(k, pose.clone())),
            }
        }
        hypotheses.extend(opened);
    }

    hypotheses.retain(|h| h.len() > 1);
    Ok(hypotheses)
}

/// Triangulates every joint seen by at least two members. Joints with
/// degenerate geometry are left absent.
pub fn triangulate_person(hypothesis: &PersonHypothesis, rig: &CameraRig) -> Result<Pose3D, GeometryError> {
    let joint_count = hypothesis.members.iter().map(|m| m.pose.joint_count()).max().unwrap_or(0);
    let cameras = hypothesis
        .members
        .iter()
        .map(|m| rig.camera(m.pose.camera_id))
        .collect::<Result<Vec<_>, _>>()?;
    let mut joints = vec![None; joint_count];
    let mut source_views = vec![0; joint_count];
    for j in 0..joint_count {
        let observations: Vec<_> = hypothesis
            .members
            .iter()
            .zip(&cameras)
            .filter_map(|(m, cam)| m.pose.joint(j).map(|joint| (*cam, joint.position)))
            .collect();
        if observations.len() < 2 {
            continue;
        }
        match triangulate_joint(&observations) {
            Ok(p) => {
                joints[j] = Some(p);
                source_views[j] = observations.len();
            }
            Err(GeometryError::DegenerateGeometry) => {
                log::debug!("joint {j}: degenerate triangulation, leaving it absent");
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Pose3D { joints, source_views })
}

/// 3D poses of one frame, in hypothesis seeding order. Hypotheses that
/// yield no triangulated joint are dropped.
pub fn estimate_frame(
    detections: &[Vec<Pose2D>],
    rig: &CameraRig,
    cfg: &AssociationConfig,
) -> Result<Vec<Pose3D>, AssociationError> {
    let hypotheses = associate_views(detections, rig, cfg)?;
    let mut poses = Vec::with_capacity(hypotheses.len());
    for h in &hypotheses {
        let pose = triangulate_person(h, rig)?;
        if !pose.is_empty() {
            poses.push(pose);
        }
    }
    Ok(poses)
}
