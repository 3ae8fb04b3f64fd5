//! Brute-force reference evaluators and random instance builders shared by
//! the integration tests. Written directly from the metric definitions,
//! without reusing library code beyond the data types.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use mvpose3d::metrics::{LimbClass, SkeletonDef};
use mvpose3d::{Pose3D, Track};
use nalgebra::Point3;
use rand::Rng;

/// Maximum-cardinality, then minimum-cost matching by exhaustive search.
/// `None` entries are forbidden. Returns (pairs, cardinality, cost) with
/// ties broken towards the lexicographically smallest pair list.
pub fn brute_force_matching(costs: &[Vec<Option<f64>>]) -> (Vec<(usize, usize)>, usize, f64) {
    let cols = costs.first().map_or(0, Vec::len);
    let mut best: Option<(Vec<(usize, usize)>, f64)> = None;
    let mut current = Vec::new();
    let mut used = vec![false; cols];
    fn recurse(
        row: usize,
        costs: &[Vec<Option<f64>>],
        used: &mut Vec<bool>,
        current: &mut Vec<(usize, usize)>,
        cost: f64,
        best: &mut Option<(Vec<(usize, usize)>, f64)>,
    ) {
        if row == costs.len() {
            let better = match best {
                None => true,
                Some((pairs, c)) => {
                    current.len() > pairs.len()
                        || (current.len() == pairs.len()
                            && (cost < *c - 1e-9 || ((cost - *c).abs() <= 1e-9 && *current < *pairs)))
                }
            };
            if better {
                *best = Some((current.clone(), cost));
            }
            return;
        }
        for col in 0..used.len() {
            if let (false, Some(c)) = (used[col], costs[row][col]) {
                used[col] = true;
                current.push((row, col));
                recurse(row + 1, costs, used, current, cost + c, best);
                current.pop();
                used[col] = false;
            }
        }
        recurse(row + 1, costs, used, current, cost, best);
    }
    recurse(0, costs, &mut used, &mut current, 0.0, &mut best);
    let (pairs, cost) = best.expect("the empty matching always exists");
    let n = pairs.len();
    (pairs, n, cost)
}

fn joint_distance_mean(a: &Pose3D, b: &Pose3D) -> Option<f64> {
    let mut total = 0.0;
    let mut n = 0;
    for j in 0..a.joints.len() {
        if let (Some(p), Some(q)) = (a.joints[j], b.joints[j]) {
            total += ((p.x - q.x).powi(2) + (p.y - q.y).powi(2) + (p.z - q.z).powi(2)).sqrt();
            n += 1;
        }
    }
    if n == 0 {
        None
    } else {
        Some(total / n as f64)
    }
}

/// Reference PCP: per-actor class rates and the overall average.
pub fn reference_pcp(
    pred: &[Vec<Pose3D>],
    gt: &[Vec<(u64, Pose3D)>],
    skeleton: &SkeletonDef,
    alpha: f64,
) -> (BTreeMap<u64, BTreeMap<LimbClass, f64>>, f64) {
    let mut correct: BTreeMap<(u64, LimbClass), usize> = BTreeMap::new();
    let mut total: BTreeMap<(u64, LimbClass), usize> = BTreeMap::new();
    for t in 0..gt.len() {
        let mut ids: Vec<u64> = gt[t].iter().map(|(id, _)| *id).collect();
        ids.sort();
        let mut claimed: Vec<usize> = Vec::new();
        for id in ids {
            let truth = &gt[t].iter().find(|(i, _)| *i == id).unwrap().1;
            let mut choice: Option<usize> = None;
            let mut choice_d = f64::INFINITY;
            for (n, p) in pred[t].iter().enumerate() {
                if claimed.contains(&n) {
                    continue;
                }
                if let Some(d) = joint_distance_mean(truth, p) {
                    if choice.is_none() || d < choice_d {
                        choice = Some(n);
                        choice_d = d;
                    }
                }
            }
            if let Some(n) = choice {
                claimed.push(n);
            }
            for limb in &skeleton.limbs {
                if limb.class == LimbClass::Other {
                    continue;
                }
                let (Some(ga), Some(gb)) = (truth.joints[limb.a], truth.joints[limb.b]) else {
                    continue;
                };
                *total.entry((id, limb.class)).or_default() += 1;
                let ok = choice.is_some_and(|n| {
                    let p = &pred[t][n];
                    match (p.joints[limb.a], p.joints[limb.b]) {
                        (Some(pa), Some(pb)) => {
                            let len = (ga - gb).norm();
                            (pa - ga).norm() <= alpha * len && (pb - gb).norm() <= alpha * len
                        }
                        _ => false,
                    }
                });
                if ok {
                    *correct.entry((id, limb.class)).or_default() += 1;
                }
            }
        }
    }
    let mut rates: BTreeMap<u64, BTreeMap<LimbClass, f64>> = BTreeMap::new();
    for (&(id, class), &n) in &total {
        let c = correct.get(&(id, class)).copied().unwrap_or(0);
        rates.entry(id).or_default().insert(class, c as f64 / n as f64);
    }
    let averages: Vec<f64> = rates
        .values()
        .map(|r| r.values().sum::<f64>() / r.len() as f64)
        .collect();
    let overall = if averages.is_empty() {
        0.0
    } else {
        averages.iter().sum::<f64>() / averages.len() as f64
    };
    (rates, overall)
}

fn centroid(p: &Pose3D) -> Option<Point3<f64>> {
    let present: Vec<_> = p.joints.iter().flatten().collect();
    if present.is_empty() {
        return None;
    }
    let mut s = Point3::origin();
    for q in &present {
        s.coords += q.coords;
    }
    Some(Point3::from(s.coords / present.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MotaCounts {
    pub fp: usize,
    pub fn_: usize,
    pub idsw: usize,
    pub gt: usize,
}

/// Reference CLEAR-MOT counts with exhaustive matching per frame.
pub fn reference_mota(pred: &[Track], gt: &[Track], threshold: f64) -> MotaCounts {
    let mut frames: Vec<usize> = pred.iter().chain(gt).flat_map(|t| t.poses.keys().copied()).collect();
    frames.sort();
    frames.dedup();
    let objects = |tracks: &[Track], f: usize| -> Vec<(u64, Point3<f64>)> {
        let mut v: Vec<_> = tracks
            .iter()
            .filter_map(|t| t.poses.get(&f).and_then(centroid).map(|c| (t.id, c)))
            .collect();
        v.sort_by_key(|x| x.0);
        v
    };
    let mut last: HashMap<u64, u64> = HashMap::new();
    let mut counts = MotaCounts {
        fp: 0,
        fn_: 0,
        idsw: 0,
        gt: 0,
    };
    for f in frames {
        let g = objects(gt, f);
        let h = objects(pred, f);
        counts.gt += g.len();
        let mut g_used = vec![false; g.len()];
        let mut h_used = vec![false; h.len()];
        for (gi, (gid, gp)) in g.iter().enumerate() {
            if let Some(prev) = last.get(gid) {
                if let Some(hi) = h.iter().position(|(hid, _)| hid == prev) {
                    if !h_used[hi] && (gp - h[hi].1).norm() < threshold {
                        g_used[gi] = true;
                        h_used[hi] = true;
                    }
                }
            }
        }
        let rows: Vec<usize> = (0..g.len()).filter(|&i| !g_used[i]).collect();
        let cols: Vec<usize> = (0..h.len()).filter(|&i| !h_used[i]).collect();
        let costs: Vec<Vec<Option<f64>>> = rows
            .iter()
            .map(|&r| {
                cols.iter()
                    .map(|&c| {
                        let d = (g[r].1 - h[c].1).norm();
                        (d < threshold).then_some(d)
                    })
                    .collect()
            })
            .collect();
        let (pairs, _, _) = if rows.is_empty() {
            (Vec::new(), 0, 0.0)
        } else {
            brute_force_matching(&costs)
        };
        for (r, c) in pairs {
            let (gi, hi) = (rows[r], cols[c]);
            if let Some(prev) = last.get(&g[gi].0) {
                if *prev != h[hi].0 {
                    counts.idsw += 1;
                }
            }
            last.insert(g[gi].0, h[hi].0);
            g_used[gi] = true;
            h_used[hi] = true;
        }
        counts.fn_ += g_used.iter().filter(|u| !**u).count();
        counts.fp += h_used.iter().filter(|u| !**u).count();
    }
    counts
}

/// Random upright body14-sized pose around `(x, y)`.
pub fn random_pose(rng: &mut impl Rng, x: f64, y: f64) -> Pose3D {
    let joints = (0..14)
        .map(|j| {
            Some(Point3::new(
                x + rng.random_range(-250.0..250.0),
                y + rng.random_range(-150.0..150.0),
                1750.0 - 120.0 * j as f64 + rng.random_range(-40.0..40.0),
            ))
        })
        .collect();
    Pose3D::from_joints(joints)
}

/// Copy of `pose` with every joint moved by up to `scale` mm per axis and
/// joints dropped with probability `drop`.
pub fn perturb(rng: &mut impl Rng, pose: &Pose3D, scale: f64, drop: f64) -> Pose3D {
    let joints = pose
        .joints
        .iter()
        .map(|j| {
            let p = (*j)?;
            if rng.random_bool(drop) {
                return None;
            }
            Some(Point3::new(
                p.x + rng.random_range(-scale..=scale),
                p.y + rng.random_range(-scale..=scale),
                p.z + rng.random_range(-scale..=scale),
            ))
        })
        .collect();
    Pose3D::from_joints(joints)
}

/// Random micro-instance: up to 3 ground-truth actors over up to 10 frames
/// and predicted tracks derived from them with noise, drops, id swaps and
/// spurious tracks.
pub fn random_track_instance(rng: &mut impl Rng) -> (Vec<Track>, Vec<Track>) {
    let actors = rng.random_range(1..=3);
    let frames = rng.random_range(1..=10);
    let mut gt = Vec::new();
    for a in 0..actors {
        let (mut x, mut y) = (rng.random_range(-2000.0..2000.0), rng.random_range(-2000.0..2000.0));
        let mut poses = std::collections::BTreeMap::new();
        for f in 0..frames {
            x += rng.random_range(-150.0..150.0);
            y += rng.random_range(-150.0..150.0);
            if rng.random_bool(0.85) {
                poses.insert(f, random_pose(rng, x, y));
            }
        }
        if !poses.is_empty() {
            gt.push(Track { id: a as u64, poses });
        }
    }
    let mut pred: Vec<Track> = Vec::new();
    let mut next_id = 100u64;
    for track in &gt {
        let mut current = Track {
            id: next_id,
            poses: Default::default(),
        };
        next_id += 1;
        for (&f, pose) in &track.poses {
            if rng.random_bool(0.1) {
                continue;
            }
            if rng.random_bool(0.1) && !current.poses.is_empty() {
                pred.push(std::mem::replace(
                    &mut current,
                    Track {
                        id: next_id,
                        poses: Default::default(),
                    },
                ));
                next_id += 1;
            }
            let scale = if rng.random_bool(0.3) { 600.0 } else { 80.0 };
            current.poses.insert(f, perturb(rng, pose, scale, 0.1));
        }
        if !current.poses.is_empty() {
            pred.push(current);
        }
    }
    if rng.random_bool(0.5) {
        let f = rng.random_range(0..frames);
        let (x, y) = (rng.random_range(-2000.0..2000.0), rng.random_range(-2000.0..2000.0));
        pred.push(Track::new(next_id, f, random_pose(rng, x, y)));
    }
    // Swap the identities of two predictions from some frame on.
    if pred.len() >= 2 && rng.random_bool(0.5) {
        let cut = rng.random_range(0..frames);
        let (a, b) = pred.split_at_mut(1);
        let tail_a = a[0].poses.split_off(&cut);
        let tail_b = b[0].poses.split_off(&cut);
        a[0].poses.extend(tail_b);
        b[0].poses.extend(tail_a);
    }
    pred.retain(|t| !t.poses.is_empty());
    (pred, gt)
}
