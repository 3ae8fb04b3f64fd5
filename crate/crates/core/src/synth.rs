//! Synthetic multi-camera scenes with known ground truth.
//!
//! Cameras sit on a 5 m ring, 2.5 m above the floor, looking at the middle
//! of a 4×4×2 m working volume (z up, millimeters). People are stick
//! figures following the configured skeleton; their 2D detections are exact
//! projections corrupted by pixel noise, joint dropout, per-camera leg
//! truncation and left/right flips. Identity labels are returned alongside
//! the detections for oracle checks.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Point2, Point3, Vector2, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::association::{Joint2, Pose2D, Pose3D};
use crate::geometry::{Camera, CameraRig, GeometryError};
use crate::metrics::SkeletonDef;
use crate::tracking::Track;

pub const IMAGE_SIZE: (u32, u32) = (640, 480);
pub const FOCAL_PX: f64 = 400.0;
pub const RING_RADIUS_MM: f64 = 5000.0;
pub const CAMERA_HEIGHT_MM: f64 = 2500.0;
/// People stand inside `[-AREA, AREA]²`; limbs stay inside the 4 m volume.
const AREA_HALF_MM: f64 = 1600.0;
const LOOK_AT_HEIGHT_MM: f64 = 1000.0;
const MAX_TURN_RAD: f64 = 15.0 * PI / 180.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid scene spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionModel {
    #[default]
    Static,
    LinearWalk,
    /// Linear walk with arms and legs swinging.
    SinusoidalLimbs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub n_people: usize,
    pub n_cameras: usize,
    pub n_frames: usize,
    pub motion: MotionModel,
    pub pixel_noise_sigma: f64,
    pub joint_dropout_prob: f64,
    /// Probability that a person has the legs cut off in a given camera.
    pub truncation_prob: f64,
    /// Probability that a detection has its left and right joints swapped.
    pub left_right_flip_prob: f64,
    /// Camera ids flips may happen in; `None` means all cameras.
    pub flip_cameras: Option<Vec<usize>>,
    /// Minimum ground-plane distance between any two people, in mm.
    pub min_separation: f64,
    /// Walking speed range in mm per frame.
    pub speed_range: (f64, f64),
    pub rng_seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            n_people: 3,
            n_cameras: 4,
            n_frames: 1,
            motion: MotionModel::Static,
            pixel_noise_sigma: 0.0,
            joint_dropout_prob: 0.0,
            truncation_prob: 0.0,
            left_right_flip_prob: 0.0,
            flip_cameras: None,
            min_separation: 600.0,
            speed_range: (10.0, 30.0),
            rng_seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Spec(m));
        if self.n_people == 0 || self.n_cameras == 0 || self.n_frames == 0 {
            return bad("counts must be >= 1".into());
        }
        for (name, p) in [
            ("joint_dropout_prob", self.joint_dropout_prob),
            ("truncation_prob", self.truncation_prob),
            ("left_right_flip_prob", self.left_right_flip_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if !(self.pixel_noise_sigma >= 0.0) {
            return bad(format!("pixel_noise_sigma must be >= 0, got {}", self.pixel_noise_sigma));
        }
        if !(self.min_separation >= 0.0) {
            return bad("min_separation must be >= 0".into());
        }
        let (lo, hi) = self.speed_range;
        if !(lo >= 0.0 && hi >= lo) {
            return bad(format!("invalid speed range ({lo}, {hi})"));
        }
        Ok(())
    }
}

/// Detections of one frame. `labels[c][k]` is the person behind
/// `detections[c][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFrame {
    pub frame: usize,
    pub detections: Vec<Vec<Pose2D>>,
    pub labels: Vec<Vec<u64>>,
}

impl SyntheticFrame {
    /// Ground-truth grouping of `(camera_id, detection index)` pairs per
    /// person, restricted to people seen by at least `min_views` cameras.
    pub fn grouping(&self, rig: &CameraRig, min_views: usize) -> BTreeMap<u64, Vec<(usize, usize)>> {
        let mut groups: BTreeMap<u64, Vec<(usize, usize)>> = BTreeMap::new();
        for (cam, labels) in rig.cameras().iter().zip(&self.labels) {
            for (k, &person) in labels.iter().enumerate() {
                groups.entry(person).or_default().push((cam.id(), k));
            }
        }
        groups.retain(|_, members| members.len() >= min_views);
        for members in groups.values_mut() {
            members.sort_unstable();
        }
        groups
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub spec: SceneSpec,
    pub skeleton: SkeletonDef,
    pub rig: CameraRig,
    /// One track per person; the track id is the person id.
    pub gt_tracks: Vec<Track>,
    pub frames: Vec<SyntheticFrame>,
}

impl Scene {
    /// Ground-truth poses of frame index `t`, keyed by person id.
    pub fn gt_frame(&self, t: usize) -> Vec<(u64, Pose3D)> {
        self.gt_tracks
            .iter()
            .filter_map(|tr| tr.poses.get(&t).map(|p| (tr.id, p.clone())))
            .collect()
    }
}

/// Joint offsets of the default body in a person's local frame:
/// (lateral towards the person's left, forward, up).
fn body14_rest_pose() -> Vec<Vector3<f64>> {
    let side = |lateral: f64, up: f64| [Vector3::new(-lateral, 0.0, up), Vector3::new(lateral, 0.0, up)];
    let [rs, ls] = side(200.0, 1450.0);
    let [re, le] = side(230.0, 1160.0);
    let [rw, lw] = side(250.0, 880.0);
    let [rh, lh] = side(100.0, 950.0);
    let [rk, lk] = side(105.0, 520.0);
    let [ra, la] = side(110.0, 90.0);
    vec![
        Vector3::new(0.0, 0.0, 1750.0),
        Vector3::new(0.0, 0.0, 1500.0),
        rs,
        re,
        rw,
        ls,
        le,
        lw,
        rh,
        rk,
        ra,
        lh,
        lk,
        la,
    ]
}

/// Rest pose for an arbitrary skeleton: the default body when the joint
/// names match, otherwise joints spread along a vertical line.
fn rest_pose(skeleton: &SkeletonDef) -> Vec<Vector3<f64>> {
    if skeleton.joint_names == SkeletonDef::body14().joint_names {
        return body14_rest_pose();
    }
    let n = skeleton.joint_count();
    (0..n)
        .map(|j| {
            let lateral = match skeleton.mirror_of(j) {
                m if m == j => 0.0,
                _ if skeleton.joint_names[j].starts_with("l_") => 150.0,
                _ => -150.0,
            };
            Vector3::new(lateral, 0.0, 1750.0 * (1.0 - j as f64 / n.max(1) as f64) + 50.0)
        })
        .collect()
}

/// Limb chains that swing: (root joint, moved joints, phase sign).
fn swing_chains(skeleton: &SkeletonDef) -> Vec<(usize, Vec<usize>, f64)> {
    let idx = |n: &str| skeleton.index_of(n);
    let chain = |root: &str, moved: &[&str], sign: f64| {
        let root = idx(root)?;
        let moved: Option<Vec<usize>> = moved.iter().map(|m| idx(m)).collect();
        Some((root, moved?, sign))
    };
    [
        chain("r_shoulder", &["r_elbow", "r_wrist"], 1.0),
        chain("l_shoulder", &["l_elbow", "l_wrist"], -1.0),
        chain("r_hip", &["r_knee", "r_ankle"], -1.0),
        chain("l_hip", &["l_knee", "l_ankle"], 1.0),
    ]
    .into_iter()
    .flatten()
    .collect()
}

struct Person {
    start: Vector2<f64>,
    velocity: Vector2<f64>,
    heading: f64,
    scale: f64,
    swing_phase: f64,
}

fn reflect(start: f64, velocity: f64, t: f64) -> f64 {
    let span = 2.0 * AREA_HALF_MM;
    let raw = start + AREA_HALF_MM + velocity * t;
    let m = raw.rem_euclid(2.0 * span);
    let folded = if m > span { 2.0 * span - m } else { m };
    folded - AREA_HALF_MM
}

impl Person {
    fn position(&self, t: usize) -> Vector2<f64> {
        let t = t as f64;
        Vector2::new(reflect(self.start.x, self.velocity.x, t), reflect(self.start.y, self.velocity.y, t))
    }

    fn walking_direction(&self, t: usize) -> Option<f64> {
        let d = self.position(t + 1) - self.position(t);
        (d.norm() > 0.0).then(|| d.y.atan2(d.x))
    }

    /// Body orientation per frame. Walkers face where they go but turn at
    /// most `MAX_TURN_RAD` per frame, so bouncing off the area boundary does
    /// not spin the whole body around in one frame.
    fn headings(&self, n_frames: usize) -> Vec<f64> {
        let mut current = self.walking_direction(0).unwrap_or(self.heading);
        (0..n_frames)
            .map(|t| {
                if let Some(target) = self.walking_direction(t) {
                    let delta = (target - current + PI).rem_euclid(TAU) - PI;
                    current += delta.clamp(-MAX_TURN_RAD, MAX_TURN_RAD);
                }
                current
            })
            .collect()
    }
}

fn place_people(spec: &SceneSpec, rng: &mut ChaCha8Rng) -> Vec<Person> {
    let moving = spec.motion != MotionModel::Static;
    let mut people: Vec<Person> = Vec::with_capacity(spec.n_people);
    for _ in 0..spec.n_people {
        let mut candidate = None;
        for attempt in 0..400 {
            // Slow down after repeated collisions so crowded scenes still fit.
            let slowdown = 1.0 / (1.0 + attempt as f64 / 50.0);
            let start = Vector2::new(
                rng.random_range(-AREA_HALF_MM..=AREA_HALF_MM),
                rng.random_range(-AREA_HALF_MM..=AREA_HALF_MM),
            );
            let direction = rng.random_range(0.0..TAU);
            let speed = if moving {
                rng.random_range(spec.speed_range.0..=spec.speed_range.1) * slowdown
            } else {
                0.0
            };
            let person = Person {
                start,
                velocity: Vector2::new(direction.cos(), direction.sin()) * speed,
                heading: rng.random_range(0.0..TAU),
                scale: rng.random_range(0.92..=1.08),
                swing_phase: rng.random_range(0.0..TAU),
            };
            let clear = people.iter().all(|other| {
                (0..spec.n_frames).all(|t| (person.position(t) - other.position(t)).norm() >= spec.min_separation)
            });
            if clear {
                candidate = Some(person);
                break;
            }
            candidate.get_or_insert(person);
        }
        people.push(candidate.expect("at least one attempt"));
    }
    people
}

fn ring_cameras(spec: &SceneSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Camera>, GeometryError> {
    let k = Matrix3::new(
        FOCAL_PX,
        0.0,
        IMAGE_SIZE.0 as f64 / 2.0,
        0.0,
        FOCAL_PX,
        IMAGE_SIZE.1 as f64 / 2.0,
        0.0,
        0.0,
        1.0,
    );
    let offset = rng.random_range(0.0..TAU);
    let n = spec.n_cameras;
    (0..n)
        .map(|i| {
            let jitter = rng.random_range(-0.15..=0.15) * (TAU / n as f64).min(PI / 2.0);
            let angle = offset + i as f64 * TAU / n as f64 + jitter;
            let height = CAMERA_HEIGHT_MM + rng.random_range(-200.0..=200.0);
            let eye = Point3::new(RING_RADIUS_MM * angle.cos(), RING_RADIUS_MM * angle.sin(), height);
            let target = Point3::new(
                rng.random_range(-150.0..=150.0),
                rng.random_range(-150.0..=150.0),
                LOOK_AT_HEIGHT_MM,
            );
            Camera::look_at(i, k, eye, target, Vector3::z(), IMAGE_SIZE)
        })
        .collect()
}

/// Rotates `v` about the lateral (x) axis of the local frame.
fn swing(v: Vector3<f64>, angle: f64) -> Vector3<f64> {
    let (s, c) = angle.sin_cos();
    Vector3::new(v.x, c * v.y - s * v.z, s * v.y + c * v.z)
}

fn world_pose(
    person: &Person,
    rest: &[Vector3<f64>],
    chains: &[(usize, Vec<usize>, f64)],
    motion: MotionModel,
    t: usize,
    heading: f64,
) -> Vec<Point3<f64>> {
    let mut local: Vec<Vector3<f64>> = rest.iter().map(|v| v * person.scale).collect();
    if motion == MotionModel::SinusoidalLimbs {
        let angle = 0.45 * (0.25 * t as f64 + person.swing_phase).sin();
        for (root, moved, sign) in chains {
            let pivot = local[*root];
            for &j in moved {
                local[j] = pivot + swing(local[j] - pivot, sign * angle);
            }
        }
    }
    // Local (lateral-left, forward, up) to world, facing `heading`.
    let forward = Vector3::new(heading.cos(), heading.sin(), 0.0);
    let left = Vector3::new(-heading.sin(), heading.cos(), 0.0);
    let base = person.position(t);
    local
        .iter()
        .map(|v| Point3::new(base.x, base.y, 0.0) + left * v.x + forward * v.y + Vector3::z() * v.z)
        .collect()
}

/// Bernoulli draw that always consumes one number, so scenes that differ
/// only in a probability share every other random choice.
fn chance(rng: &mut ChaCha8Rng, p: f64) -> bool {
    rng.random::<f64>() < p
}

/// Generates a scene; identical specs give identical scenes.
pub fn generate_scene(spec: &SceneSpec) -> Result<Scene, SynthError> {
    generate_scene_with_skeleton(spec, SkeletonDef::body14())
}

pub fn generate_scene_with_skeleton(spec: &SceneSpec, skeleton: SkeletonDef) -> Result<Scene, SynthError> {
    spec.validate()?;
    skeleton.validate().map_err(|e| SynthError::Spec(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let cameras = ring_cameras(spec, &mut rng)?;
    let rig = CameraRig::new(cameras)?;
    let people = place_people(spec, &mut rng);
    let headings: Vec<Vec<f64>> = people.iter().map(|p| p.headings(spec.n_frames)).collect();
    let rest = rest_pose(&skeleton);
    let chains = swing_chains(&skeleton);
    let legs: Vec<usize> = ["r_hip", "r_knee", "r_ankle", "l_hip", "l_knee", "l_ankle"]
        .iter()
        .filter_map(|n| skeleton.index_of(n))
        .collect();
    let mirror: Vec<usize> = (0..skeleton.joint_count()).map(|j| skeleton.mirror_of(j)).collect();
    let noise = Normal::new(0.0, spec.pixel_noise_sigma.max(0.0)).expect("sigma is finite and >= 0");
    let noisy = spec.pixel_noise_sigma > 0.0;

    let truncated: Vec<Vec<bool>> = (0..people.len())
        .map(|_| (0..rig.len()).map(|_| chance(&mut rng, spec.truncation_prob)).collect())
        .collect();

    let mut gt_tracks: Vec<Track> = (0..people.len())
        .map(|id| Track {
            id: id as u64,
            poses: BTreeMap::new(),
        })
        .collect();
    let mut frames = Vec::with_capacity(spec.n_frames);
    for t in 0..spec.n_frames {
        let world: Vec<Vec<Point3<f64>>> = people
            .iter()
            .zip(&headings)
            .map(|(p, h)| world_pose(p, &rest, &chains, spec.motion, t, h[t]))
            .collect();
        for (track, joints) in gt_tracks.iter_mut().zip(&world) {
            track
                .poses
                .insert(t, Pose3D::from_joints(joints.iter().copied().map(Some).collect()));
        }

        let mut detections = Vec::with_capacity(rig.len());
        let mut labels = Vec::with_capacity(rig.len());
        for (c, cam) in rig.cameras().iter().enumerate() {
            let flips_here = spec.flip_cameras.as_ref().is_none_or(|ids| ids.contains(&cam.id()));
            let mut order: Vec<usize> = (0..people.len()).collect();
            order.shuffle(&mut rng);
            let mut cam_dets = Vec::new();
            let mut cam_labels = Vec::new();
            for person in order {
                let mut joints: Vec<Option<Joint2>> = world[person]
                    .iter()
                    .map(|x| {
                        let mut px: Point2<f64> = cam.project(x).ok()?;
                        if noisy {
                            px.x += noise.sample(&mut rng);
                            px.y += noise.sample(&mut rng);
                        }
                        let confidence = if noisy { rng.random_range(0.6..=1.0) } else { 1.0 };
                        Some(Joint2 {
                            position: px,
                            confidence,
                        })
                    })
                    .collect();
                for joint in joints.iter_mut() {
                    if chance(&mut rng, spec.joint_dropout_prob) {
                        *joint = None;
                    }
                    if joint.as_ref().is_some_and(|j| !cam.contains(&j.position, 0.0)) {
                        *joint = None;
                    }
                }
                if truncated[person][c] {
                    for &j in &legs {
                        joints[j] = None;
                    }
                }
                if chance(&mut rng, spec.left_right_flip_prob) && flips_here {
                    joints = mirror.iter().map(|&m| joints[m]).collect();
                }
                if joints.iter().any(Option::is_some) {
                    cam_dets.push(Pose2D::new(cam.id(), joints));
                    cam_labels.push(person as u64);
                }
            }
            detections.push(cam_dets);
            labels.push(cam_labels);
        }
        frames.push(SyntheticFrame {
            frame: t,
            detections,
            labels,
        });
    }

    Ok(Scene {
        spec: spec.clone(),
        skeleton,
        rig,
        gt_tracks,
        frames,
    })
}
