//! PCP in 3D and CLEAR-MOT accuracy.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::{solve_bipartite, CostMatrix, FORBIDDEN};
use crate::association::Pose3D;
use crate::tracking::Track;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("skeleton mismatch: {0}")]
    SkeletonMismatch(String),
    #[error("invalid skeleton: {0}")]
    InvalidSkeleton(String),
    #[error("alpha must be > 0, got {0}")]
    Alpha(f64),
    #[error("prediction covers {pred} frames, ground truth {gt}")]
    FrameCount { pred: usize, gt: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LimbClass {
    #[serde(rename = "ua")]
    UpperArm,
    #[serde(rename = "la")]
    LowerArm,
    #[serde(rename = "ul")]
    UpperLeg,
    #[serde(rename = "ll")]
    LowerLeg,
    #[serde(rename = "other")]
    Other,
}

impl LimbClass {
    pub const SCORED: [LimbClass; 4] = [
        LimbClass::UpperArm,
        LimbClass::LowerArm,
        LimbClass::UpperLeg,
        LimbClass::LowerLeg,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            LimbClass::UpperArm => "ua",
            LimbClass::LowerArm => "la",
            LimbClass::UpperLeg => "ul",
            LimbClass::LowerLeg => "ll",
            LimbClass::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limb {
    pub a: usize,
    pub b: usize,
    pub class: LimbClass,
}

/// Ordered joint names plus the limbs connecting them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkeletonDef {
    pub joint_names: Vec<String>,
    pub limbs: Vec<Limb>,
}

impl SkeletonDef {
    pub fn new(joint_names: Vec<String>, limbs: Vec<Limb>) -> Result<Self, MetricsError> {
        let s = Self { joint_names, limbs };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        let n = self.joint_names.len();
        if n == 0 {
            return Err(MetricsError::InvalidSkeleton("no joints".into()));
        }
        for limb in &self.limbs {
            if limb.a >= n || limb.b >= n {
                return Err(MetricsError::InvalidSkeleton(format!(
                    "limb ({}, {}) out of range for {n} joints",
                    limb.a, limb.b
                )));
            }
            if limb.a == limb.b {
                return Err(MetricsError::InvalidSkeleton(format!("self-loop on joint {}", limb.a)));
            }
        }
        Ok(())
    }

    pub fn joint_count(&self) -> usize {
        self.joint_names.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.joint_names.iter().position(|n| n == name)
    }

    /// Index of the mirrored joint (`l_*` ↔ `r_*`), or itself.
    pub fn mirror_of(&self, joint: usize) -> usize {
        let name = &self.joint_names[joint];
        let swapped = if let Some(rest) = name.strip_prefix("l_") {
            format!("r_{rest}")
        } else if let Some(rest) = name.strip_prefix("r_") {
            format!("l_{rest}")
        } else {
            return joint;
        };
        self.index_of(&swapped).unwrap_or(joint)
    }

    /// 14-joint body: head top, neck, and left/right shoulder, elbow, wrist,
    /// hip, knee, ankle. The head and torso links are unscored.
    pub fn body14() -> Self {
        let names = [
            "head_top",
            "neck",
            "r_shoulder",
            "r_elbow",
            "r_wrist",
            "l_shoulder",
            "l_elbow",
            "l_wrist",
            "r_hip",
            "r_knee",
            "r_ankle",
            "l_hip",
            "l_knee",
            "l_ankle",
        ];
        use LimbClass::*;
        let limb = |a, b, class| Limb { a, b, class };
        let limbs = vec![
            limb(2, 3, UpperArm),
            limb(3, 4, LowerArm),
            limb(5, 6, UpperArm),
            limb(6, 7, LowerArm),
            limb(8, 9, UpperLeg),
            limb(9, 10, LowerLeg),
            limb(11, 12, UpperLeg),
            limb(12, 13, LowerLeg),
            limb(0, 1, Other),
            limb(1, 2, Other),
            limb(1, 5, Other),
            limb(2, 8, Other),
            limb(5, 11, Other),
        ];
        Self {
            joint_names: names.iter().map(|s| s.to_string()).collect(),
            limbs,
        }
    }
}

impl Default for SkeletonDef {
    fn default() -> Self {
        Self::body14()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PartCounts {
    pub correct: usize,
    pub total: usize,
}

impl PartCounts {
    pub fn rate(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorPcp {
    pub actor: u64,
    pub counts: BTreeMap<LimbClass, PartCounts>,
    pub rates: BTreeMap<LimbClass, f64>,
    /// Mean of the per-class rates.
    pub average: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcpReport {
    pub alpha: f64,
    pub actors: Vec<ActorPcp>,
    /// Mean over actors of each class rate.
    pub per_class: BTreeMap<LimbClass, f64>,
    /// Mean over actors of the actor averages.
    pub average: f64,
}

impl PcpReport {
    fn from_counts(alpha: f64, counts: BTreeMap<u64, BTreeMap<LimbClass, PartCounts>>) -> Self {
        let mut actors = Vec::new();
        for (actor, classes) in counts {
            let rates: BTreeMap<_, _> = classes
                .iter()
                .filter_map(|(&c, n)| n.rate().map(|r| (c, r)))
                .collect();
            if rates.is_empty() {
                continue;
            }
            let average = rates.values().sum::<f64>() / rates.len() as f64;
            actors.push(ActorPcp {
                actor,
                counts: classes,
                rates,
                average,
            });
        }
        let mut per_class = BTreeMap::new();
        for class in LimbClass::SCORED {
            let rates: Vec<f64> = actors.iter().filter_map(|a| a.rates.get(&class).copied()).collect();
            if !rates.is_empty() {
                per_class.insert(class, rates.iter().sum::<f64>() / rates.len() as f64);
            }
        }
        let average = if actors.is_empty() {
            0.0
        } else {
            actors.iter().map(|a| a.average).sum::<f64>() / actors.len() as f64
        };
        Self {
            alpha,
            actors,
            per_class,
            average,
        }
    }

    /// Plain-text table: one row per limb class plus `avg`, one column per
    /// actor, and the overall average last.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<6}", "Actor");
        for a in &self.actors {
            let _ = write!(out, " {:>6}", a.actor);
        }
        out.push('\n');
        for class in LimbClass::SCORED {
            let _ = write!(out, "{:<6}", class.short_name());
            for a in &self.actors {
                match a.rates.get(&class) {
                    Some(r) => {
                        let _ = write!(out, " {r:>6.3}");
                    }
                    None => {
                        let _ = write!(out, " {:>6}", "-");
                    }
                }
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<6}", "avg");
        for a in &self.actors {
            let _ = write!(out, " {:>6.3}", a.average);
        }
        out.push('\n');
        let _ = writeln!(out, "avg*   {:>6.3}", self.average);
        out
    }
}

/// Mean distance over joints present in both poses.
fn mean_shared_distance(a: &Pose3D, b: &Pose3D) -> Option<f64> {
    let (sum, n) = a
        .joints
        .iter()
        .zip(&b.joints)
        .filter_map(|(p, q)| Some((p.as_ref()?, q.as_ref()?)))
        .fold((0.0, 0usize), |(s, n), (p, q)| (s + (p - q).norm(), n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// PCP over a sequence. `pred[t]` and `gt[t]` hold the poses of frame `t`;
/// ground-truth poses carry their actor id.
///
/// Per frame, actors are visited in id order and each takes the closest
/// remaining prediction (mean shared-joint distance). A scored limb is
/// correct when both predicted endpoints lie within `alpha` times the true
/// limb length of the true endpoints. Limbs of unmatched actors count as
/// wrong; limbs with a missing ground-truth endpoint are not scored.
pub fn pcp_score(
    pred: &[Vec<Pose3D>],
    gt: &[Vec<(u64, Pose3D)>],
    skeleton: &SkeletonDef,
    alpha: f64,
) -> Result<PcpReport, MetricsError> {
    if !(alpha > 0.0) {
        return Err(MetricsError::Alpha(alpha));
    }
    if pred.len() != gt.len() {
        return Err(MetricsError::FrameCount {
            pred: pred.len(),
            gt: gt.len(),
        });
    }
    let joints = skeleton.joint_count();
    for pose in pred.iter().flatten().chain(gt.iter().flatten().map(|(_, p)| p)) {
        if pose.joint_count() != joints {
            return Err(MetricsError::SkeletonMismatch(format!(
                "pose has {} joints, skeleton has {joints}",
                pose.joint_count()
            )));
        }
    }

    let mut counts: BTreeMap<u64, BTreeMap<LimbClass, PartCounts>> = BTreeMap::new();
    for (preds, actors) in pred.iter().zip(gt) {
        let mut order: Vec<&(u64, Pose3D)> = actors.iter().collect();
        order.sort_by_key(|(id, _)| *id);
        let mut taken = vec![false; preds.len()];
        for (actor, truth) in order {
            let mut best: Option<(usize, f64)> = None;
            for (n, candidate) in preds.iter().enumerate() {
                if taken[n] {
                    continue;
                }
                if let Some(d) = mean_shared_distance(truth, candidate) {
                    if best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((n, d));
                    }
                }
            }
            let matched = best.map(|(n, _)| {
                taken[n] = true;
                &preds[n]
            });
            let entry = counts.entry(*actor).or_default();
            for limb in skeleton.limbs.iter().filter(|l| l.class != LimbClass::Other) {
                let (Some(ga), Some(gb)) = (truth.joints[limb.a], truth.joints[limb.b]) else {
                    continue;
                };
                let slot = entry.entry(limb.class).or_default();
                slot.total += 1;
                let Some(p) = matched else { continue };
                let (Some(pa), Some(pb)) = (p.joints[limb.a], p.joints[limb.b]) else {
                    continue;
                };
                let tolerance = alpha * (ga - gb).norm();
                if (pa - ga).norm() <= tolerance && (pb - gb).norm() <= tolerance {
                    slot.correct += 1;
                }
            }
        }
    }
    Ok(PcpReport::from_counts(alpha, counts))
}

/// Per-frame pose lists for `frames`, built from tracks.
pub fn frames_from_tracks(tracks: &[Track], frames: impl IntoIterator<Item = usize>) -> Vec<Vec<(u64, Pose3D)>> {
    frames
        .into_iter()
        .map(|f| {
            tracks
                .iter()
                .filter_map(|t| t.poses.get(&f).map(|p| (t.id, p.clone())))
                .collect()
        })
        .collect()
}

/// Inclusive frame span covered by a set of tracks.
pub fn frame_span(tracks: &[Track]) -> Option<(usize, usize)> {
    let first = tracks.iter().filter(|t| !t.is_empty()).map(Track::first_frame).min()?;
    let last = tracks.iter().filter(|t| !t.is_empty()).map(Track::last_active).max()?;
    Some((first, last))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotaReport {
    pub false_positives: usize,
    pub false_negatives: usize,
    pub id_switches: usize,
    pub matches: usize,
    pub gt_count: usize,
    pub match_threshold: f64,
    pub mota: f64,
}

/// CLEAR-MOT accuracy of predicted tracks against ground-truth tracks,
/// using the distance between pose centroids.
///
/// Per frame, a ground-truth object keeps the prediction it was last
/// matched to when that prediction is still present, unclaimed and closer
/// than `match_threshold`. The remaining objects are matched by a
/// minimum-distance bipartite assignment restricted to pairs under the
/// threshold; a match to a different prediction than the last one counts as
/// an identity switch. `mota = 1 - (FP + FN + IDSW) / GT`, with `GT` taken
/// as 1 when the ground truth is empty.
pub fn mota_score(pred_tracks: &[Track], gt_tracks: &[Track], match_threshold: f64) -> MotaReport {
    let frames: BTreeSet<usize> = pred_tracks
        .iter()
        .chain(gt_tracks)
        .flat_map(|t| t.poses.keys().copied())
        .collect();

    let centroids_at = |tracks: &[Track], frame: usize| -> Vec<(u64, nalgebra::Point3<f64>)> {
        let mut v: Vec<_> = tracks
            .iter()
            .filter_map(|t| Some((t.id, t.poses.get(&frame)?.centroid()?)))
            .collect();
        v.sort_by_key(|(id, _)| *id);
        v
    };

    let mut last_match: HashMap<u64, u64> = HashMap::new();
    let (mut fp, mut fn_, mut idsw, mut matches, mut gt_count) = (0, 0, 0, 0, 0);
    for frame in frames {
        let gts = centroids_at(gt_tracks, frame);
        let hyps = centroids_at(pred_tracks, frame);
        gt_count += gts.len();
        let mut gt_done = vec![false; gts.len()];
        let mut hyp_done = vec![false; hyps.len()];

        for (g, (gid, gp)) in gts.iter().enumerate() {
            let Some(&hid) = last_match.get(gid) else { continue };
            let Some(h) = hyps.iter().position(|(id, _)| *id == hid) else { continue };
            if !hyp_done[h] && (gp - hyps[h].1).norm() < match_threshold {
                gt_done[g] = true;
                hyp_done[h] = true;
                matches += 1;
            }
        }

        let open_gt: Vec<usize> = (0..gts.len()).filter(|&g| !gt_done[g]).collect();
        let open_hyp: Vec<usize> = (0..hyps.len()).filter(|&h| !hyp_done[h]).collect();
        let costs = CostMatrix::from_fn(open_gt.len(), open_hyp.len(), |r, c| {
            let d = (gts[open_gt[r]].1 - hyps[open_hyp[c]].1).norm();
            if d < match_threshold {
                d
            } else {
                FORBIDDEN
            }
        })
        .expect("distances are nonnegative");
        for (r, c) in solve_bipartite(&costs).pairs {
            let (g, h) = (open_gt[r], open_hyp[c]);
            let (gid, hid) = (gts[g].0, hyps[h].0);
            if last_match.get(&gid).is_some_and(|&prev| prev != hid) {
                idsw += 1;
            }
            last_match.insert(gid, hid);
            gt_done[g] = true;
            hyp_done[h] = true;
            matches += 1;
        }
        fn_ += gt_done.iter().filter(|d| !**d).count();
        fp += hyp_done.iter().filter(|d| !**d).count();
    }

    let errors = fp + fn_ + idsw;
    MotaReport {
        false_positives: fp,
        false_negatives: fn_,
        id_switches: idsw,
        matches,
        gt_count,
        match_threshold,
        mota: 1.0 - errors as f64 / gt_count.max(1) as f64,
    }
}
