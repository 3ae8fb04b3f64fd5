//! Temporal fill-in and Gaussian smoothing of per-joint track trajectories.

use std::collections::BTreeMap;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::association::Pose3D;
use crate::tracking::Track;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid smoothing config: {0}")]
pub struct SmoothingConfigError(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoothingConfig {
    /// Standard deviation of the Gaussian kernel, in frames.
    pub sigma: f64,
    /// Longest run of missing frames that gets interpolated.
    pub fill_window: usize,
    /// Kernel support in units of `sigma`.
    pub kernel_radius: f64,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            sigma: 2.0,
            fill_window: 10,
            kernel_radius: 3.0,
        }
    }
}

impl SmoothingConfig {
    pub fn validate(&self) -> Result<(), SmoothingConfigError> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(SmoothingConfigError(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if !(self.kernel_radius >= 2.0) || !self.kernel_radius.is_finite() {
            return Err(SmoothingConfigError(format!(
                "kernel_radius must be >= 2, got {}",
                self.kernel_radius
            )));
        }
        Ok(())
    }

    /// Half-width of the truncated kernel in frames.
    fn half_width(&self) -> usize {
        (self.kernel_radius * self.sigma).floor() as usize
    }
}

/// Dense per-joint view of a track over `[first, last]`.
struct Trajectories {
    first: usize,
    joint_count: usize,
    /// `values[j][t - first]`
    values: Vec<Vec<Option<Point3<f64>>>>,
}

impl Trajectories {
    fn from_track(track: &Track) -> Self {
        let first = track.first_frame();
        let len = track.last_active() - first + 1;
        let joint_count = track.poses.values().map(Pose3D::joint_count).max().unwrap_or(0);
        let mut values = vec![vec![None; len]; joint_count];
        for (&frame, pose) in &track.poses {
            for (j, p) in pose.joints.iter().enumerate() {
                values[j][frame - first] = *p;
            }
        }
        Self {
            first,
            joint_count,
            values,
        }
    }

    /// Rebuilds a track. Frames that had a pose keep it (with updated
    /// joints); frames without one gain a pose only if some joint is present.
    fn into_track(self, original: &Track) -> Track {
        let len = self.values.first().map_or(0, Vec::len);
        let mut poses = BTreeMap::new();
        for offset in 0..len {
            let frame = self.first + offset;
            let joints: Vec<_> = (0..self.joint_count).map(|j| self.values[j][offset]).collect();
            match original.poses.get(&frame) {
                Some(old) => {
                    let source_views = joints
                        .iter()
                        .enumerate()
                        .map(|(j, p)| match (p, old.joints.get(j).copied().flatten()) {
                            (Some(_), Some(_)) => old.source_views.get(j).copied().unwrap_or(0),
                            _ => 0,
                        })
                        .collect();
                    poses.insert(frame, Pose3D { joints, source_views });
                }
                None if joints.iter().any(Option::is_some) => {
                    poses.insert(frame, Pose3D::from_joints(joints));
                }
                None => {}
            }
        }
        Track {
            id: original.id,
            poses,
        }
    }
}

/// Fills interior gaps of at most `fill_window` frames in every joint
/// trajectory by linear interpolation between the bounding samples.
/// Leading and trailing gaps stay empty.
pub fn fill_missing(track: &Track, cfg: &SmoothingConfig) -> Track {
    let mut traj = Trajectories::from_track(track);
    for series in &mut traj.values {
        let mut last_present: Option<usize> = None;
        for t in 0..series.len() {
            let Some(current) = series[t] else { continue };
            if let Some(prev) = last_present {
                let gap = t - prev - 1;
                if gap > 0 && gap <= cfg.fill_window {
                    let start = series[prev].expect("present");
                    let step = (current - start) / (t - prev) as f64;
                    for (k, slot) in series[prev + 1..t].iter_mut().enumerate() {
                        *slot = Some(start + step * (k + 1) as f64);
                    }
                }
            }
            last_present = Some(t);
        }
    }
    traj.into_track(track)
}

/// Convolves each coordinate of each joint trajectory with a truncated
/// Gaussian. Weights are renormalized over the present samples inside the
/// window, so missing samples are never invented and boundaries need no
/// padding.
pub fn smooth_track(track: &Track, cfg: &SmoothingConfig) -> Track {
    let mut traj = Trajectories::from_track(track);
    let half = cfg.half_width();
    let kernel: Vec<f64> = (0..=half)
        .map(|d| (-(d as f64).powi(2) / (2.0 * cfg.sigma * cfg.sigma)).exp())
        .collect();
    for series in &mut traj.values {
        let source = series.clone();
        for (t, slot) in series.iter_mut().enumerate() {
            if slot.is_none() {
                continue;
            }
            let lo = t.saturating_sub(half);
            let hi = (t + half).min(source.len() - 1);
            let mut acc = Vector3::zeros();
            let mut total = 0.0;
            for (s, sample) in source.iter().enumerate().take(hi + 1).skip(lo) {
                if let Some(p) = sample {
                    let w = kernel[t.abs_diff(s)];
                    acc += p.coords * w;
                    total += w;
                }
            }
            *slot = Some(Point3::from(acc / total));
        }
    }
    traj.into_track(track)
}

/// `fill_missing` followed by `smooth_track`.
pub fn fill_and_smooth(track: &Track, cfg: &SmoothingConfig) -> Track {
    smooth_track(&fill_missing(track, cfg), cfg)
}
