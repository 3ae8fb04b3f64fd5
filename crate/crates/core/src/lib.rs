//! Multi-view multi-person 3D pose estimation from calibrated cameras.
//!
//! Per frame, 2D skeleton detections from every camera are grouped into
//! person hypotheses by epipolar consistency and triangulated; the 3D poses
//! are then linked over time into tracks, optionally gap-filled and
//! smoothed, and scored with PCP and MOTA. A synthetic scene generator
//! provides ground truth for testing.

pub mod assignment;
pub mod association;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod smoothing;
pub mod synth;
pub mod tracking;

pub use assignment::{solve_bipartite, Assignment, CostMatrix, FORBIDDEN};
pub use association::{
    associate_views, estimate_frame, triangulate_person, AssociationConfig, AssociationError, Joint2, PersonHypothesis,
    Pose2D, Pose3D,
};
pub use geometry::{Camera, CameraRig, EpipolarMetric, FundamentalMatrix, GeometryError};
pub use io::IoError;
pub use metrics::{mota_score, pcp_score, LimbClass, MotaReport, PcpReport, SkeletonDef};
pub use pipeline::{run_pipeline, Dataset, PipelineError, RunConfig};
pub use smoothing::{fill_and_smooth, SmoothingConfig};
pub use synth::{generate_scene, MotionModel, Scene, SceneSpec};
pub use tracking::{track_sequence, Track, TrackingConfig, Tracker};
