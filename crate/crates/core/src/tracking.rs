//! Frame-to-frame association of 3D poses into identity tracks.

use std::collections::BTreeMap;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::{solve_bipartite, CostMatrix};
use crate::association::Pose3D;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackingError {
    #[error("invalid tracking config: {0}")]
    Config(String),
    #[error("frame {frame} is not after the last processed frame {last}")]
    FrameOrder { frame: usize, last: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    #[default]
    Z,
}

impl Axis {
    fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackingConfig {
    /// Largest pose distance (mm) that still continues a track.
    pub tau: f64,
    /// World axis normal to the ground plane.
    pub ground_plane_axis: Axis,
    /// A track can be continued at frame `t` if it was last extended at a
    /// frame `>= t - max_gap`. `1` matches consecutive frames only.
    pub max_gap: usize,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        Self {
            tau: 200.0,
            ground_plane_axis: Axis::Z,
            max_gap: 10,
        }
    }
}

impl TrackingConfig {
    pub fn validate(&self) -> Result<(), TrackingError> {
        if !(self.tau > 0.0) {
            return Err(TrackingError::Config(format!("tau must be > 0, got {}", self.tau)));
        }
        Ok(())
    }
}

/// Identity-stamped sequence of poses keyed by frame index.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u64,
    pub poses: BTreeMap<usize, Pose3D>,
}

impl Track {
    pub fn new(id: u64, frame: usize, pose: Pose3D) -> Self {
        Self {
            id,
            poses: BTreeMap::from([(frame, pose)]),
        }
    }

    pub fn first_frame(&self) -> usize {
        *self.poses.keys().next().expect("tracks are nonempty")
    }

    pub fn last_active(&self) -> usize {
        *self.poses.keys().next_back().expect("tracks are nonempty")
    }

    pub fn latest(&self) -> &Pose3D {
        self.poses.values().next_back().expect("tracks are nonempty")
    }

    pub fn frames(&self) -> impl Iterator<Item = usize> + '_ {
        self.poses.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }
}

/// Mean distance over joints present in both poses; without shared joints,
/// the distance between the pose centroids projected onto the ground plane.
///
/// Returns `f64::INFINITY` if either pose has no joints at all.
pub fn pose_distance_3d(a: &Pose3D, b: &Pose3D, cfg: &TrackingConfig) -> f64 {
    let (sum, shared) = a
        .joints
        .iter()
        .zip(&b.joints)
        .filter_map(|(p, q)| Some((p.as_ref()?, q.as_ref()?)))
        .fold((0.0, 0usize), |(s, n), (p, q)| (s + (p - q).norm(), n + 1));
    if shared > 0 {
        return sum / shared as f64;
    }
    match (a.centroid(), b.centroid()) {
        (Some(ca), Some(cb)) => ground_distance(&ca, &cb, cfg.ground_plane_axis),
        _ => f64::INFINITY,
    }
}

fn ground_distance(a: &Point3<f64>, b: &Point3<f64>, normal: Axis) -> f64 {
    let mut d = a - b;
    d[normal.index()] = 0.0;
    d.norm()
}

/// Greedy online tracker: each frame is matched against the most recent
/// pose of every live track.
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackingConfig,
    tracks: Vec<Track>,
    next_id: u64,
    last_frame: Option<usize>,
}

impl Tracker {
    pub fn new(cfg: TrackingConfig) -> Result<Self, TrackingError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            tracks: Vec::new(),
            next_id: 0,
            last_frame: None,
        })
    }

    pub fn config(&self) -> &TrackingConfig {
        &self.cfg
    }

    /// All tracks created so far, live or not, in creation order.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn into_tracks(self) -> Vec<Track> {
        self.tracks
    }

    fn is_live(&self, track: &Track, frame: usize) -> bool {
        frame - track.last_active() <= self.cfg.max_gap
    }

    /// Indices (into [`Tracker::tracks`]) of tracks that can still be
    /// continued at `frame`.
    pub fn live_tracks(&self, frame: usize) -> Vec<usize> {
        (0..self.tracks.len())
            .filter(|&n| self.tracks[n].last_active() < frame && self.is_live(&self.tracks[n], frame))
            .collect()
    }

    /// Adds the poses of `frame`. Frames must be strictly increasing; empty
    /// frames only age the live tracks.
    pub fn track_frame(&mut self, frame: usize, poses: Vec<Pose3D>) -> Result<(), TrackingError> {
        if let Some(last) = self.last_frame {
            if frame <= last {
                return Err(TrackingError::FrameOrder { frame, last });
            }
        }
        self.last_frame = Some(frame);

        let live = self.live_tracks(frame);
        let costs = CostMatrix::from_fn(poses.len(), live.len(), |p, t| {
            pose_distance_3d(self.tracks[live[t]].latest(), &poses[p], &self.cfg)
        })
        .expect("pose distances are nonnegative");
        let assignment = solve_bipartite(&costs);

        for (p, pose) in poses.into_iter().enumerate() {
            match assignment.col_of(p) {
                Some(t) if costs.get(p, t) < self.cfg.tau => {
                    self.tracks[live[t]].poses.insert(frame, pose);
                }
                _ => {
                    self.tracks.push(Track::new(self.next_id, frame, pose));
                    self.next_id += 1;
                }
            }
        }
        Ok(())
    }
}

/// Runs the tracker over `(frame, poses)` pairs in increasing frame order.
pub fn track_sequence(
    frames: impl IntoIterator<Item = (usize, Vec<Pose3D>)>,
    cfg: &TrackingConfig,
) -> Result<Vec<Track>, TrackingError> {
    let mut tracker = Tracker::new(cfg.clone())?;
    for (frame, poses) in frames {
        tracker.track_frame(frame, poses)?;
    }
    Ok(tracker.into_tracks())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pose(offset: [f64; 3], present: &[usize]) -> Pose3D {
        let joints = (0..6)
            .map(|j| {
                present.contains(&j).then(|| {
                    Point3::new(
                        offset[0] + (j % 2) as f64 * 300.0,
                        offset[1],
                        offset[2] + 300.0 * j as f64,
                    )
                })
            })
            .collect();
        Pose3D::from_joints(joints)
    }

    const ALL: &[usize] = &[0, 1, 2, 3, 4, 5];

    #[test]
    fn distance_basics() {
        let cfg = TrackingConfig::default();
        let a = pose([0.0, 0.0, 0.0], ALL);
        assert_eq!(pose_distance_3d(&a, &a, &cfg), 0.0);
        let b = pose([100.0, 0.0, 0.0], ALL);
        assert!((pose_distance_3d(&a, &b, &cfg) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn disjoint_joints_use_ground_centroids() {
        let cfg = TrackingConfig::default();
        let a = pose([0.0, 0.0, 0.0], &[4, 5]);
        let b = pose([30.0, 40.0, 0.0], &[0, 1]);
        // Centroids: a = (150, 0, 1350), b = (180, 40, 150); only x and y count.
        let oracle = ((180.0f64 - 150.0).powi(2) + 40.0f64.powi(2)).sqrt();
        assert!((pose_distance_3d(&a, &b, &cfg) - oracle).abs() < 1e-9);

        let y_up = TrackingConfig {
            ground_plane_axis: Axis::Y,
            ..Default::default()
        };
        let oracle = ((180.0f64 - 150.0).powi(2) + (150.0f64 - 1350.0).powi(2)).sqrt();
        assert!((pose_distance_3d(&a, &b, &y_up) - oracle).abs() < 1e-9);
    }

    #[test]
    fn two_walkers_keep_their_ids() {
        let cfg = TrackingConfig::default();
        let frames = (0..100).map(|t| {
            let s = t as f64 * 15.0;
            (t, vec![pose([s, 1000.0, 0.0], ALL), pose([-s, -1000.0, 0.0], ALL)])
        });
        let tracks = track_sequence(frames, &cfg).unwrap();
        assert_eq!(tracks.len(), 2);
        assert!(tracks.iter().all(|t| t.len() == 100));
        assert!(tracks[0].poses.values().all(|p| p.joints[0].unwrap().y > 0.0));
    }

    #[test]
    fn teleport_starts_new_track() {
        let cfg = TrackingConfig::default();
        let frames = vec![
            (0, vec![pose([0.0, 0.0, 0.0], ALL)]),
            (1, vec![pose([50.0, 0.0, 0.0], ALL)]),
            (2, vec![pose([450.0, 0.0, 0.0], ALL)]),
        ];
        let tracks = track_sequence(frames, &cfg).unwrap();
        assert_eq!(tracks.len(), 2);
        assert_eq!(tracks[0].frames().collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(tracks[1].id, 1);
        assert_eq!(tracks[1].frames().collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn short_gap_is_bridged() {
        let cfg = TrackingConfig {
            max_gap: 2,
            ..Default::default()
        };
        let frames = vec![
            (0, vec![pose([0.0, 0.0, 0.0], ALL)]),
            (1, vec![]),
            (2, vec![pose([20.0, 0.0, 0.0], ALL)]),
        ];
        let tracks = track_sequence(frames.clone(), &cfg).unwrap();
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].frames().collect::<Vec<_>>(), vec![0, 2]);

        let literal = TrackingConfig {
            max_gap: 1,
            ..Default::default()
        };
        assert_eq!(track_sequence(frames, &literal).unwrap().len(), 2);
    }

    #[test]
    fn rejects_non_increasing_frames() {
        let mut t = Tracker::new(TrackingConfig::default()).unwrap();
        t.track_frame(3, vec![]).unwrap();
        assert_eq!(t.track_frame(3, vec![]), Err(TrackingError::FrameOrder { frame: 3, last: 3 }));
        assert!(Tracker::new(TrackingConfig {
            tau: -1.0,
            ..Default::default()
        })
        .is_err());
    }

    #[test]
    fn each_track_gains_at_most_one_pose() {
        let cfg = TrackingConfig::default();
        let frames = vec![
            (0, vec![pose([0.0, 0.0, 0.0], ALL)]),
            (1, vec![pose([10.0, 0.0, 0.0], ALL), pose([20.0, 0.0, 0.0], ALL)]),
        ];
        let tracks = track_sequence(frames, &cfg).unwrap();
        assert_eq!(tracks.len(), 2);
        assert_eq!(tracks[0].len(), 2);
    }
}
