use std::collections::BTreeMap;

use mvpose3d::smoothing::{fill_missing, smooth_track, SmoothingConfig};
use mvpose3d::{Pose3D, Track};
use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[test]
fn constant_velocity_walker_is_filled_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let truth = |t: usize, j: usize| Point3::new(12.0 * t as f64 + 40.0 * j as f64, -7.5 * t as f64, 100.0 * j as f64);
    let poses: BTreeMap<usize, Pose3D> = (0..120)
        .map(|t| {
            let joints = (0..14).map(|j| (t == 0 || t == 119 || !rng.random_bool(0.1)).then(|| truth(t, j))).collect();
            (t, Pose3D::from_joints(joints))
        })
        .collect();
    let filled = fill_missing(&Track { id: 0, poses }, &SmoothingConfig::default());
    let mut worst = 0.0f64;
    for (t, pose) in &filled.poses {
        for (j, p) in pose.joints.iter().enumerate() {
            worst = worst.max((p.expect("every gap is short") - truth(*t, j)).norm());
        }
    }
    assert!(worst < 1.0, "{worst}");
}

#[test]
fn smoothing_reduces_noise_on_sinusoids() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let noise = Normal::new(0.0, 20.0).unwrap();
    let cfg = SmoothingConfig::default();
    for trial in 0..1000 {
        let amplitude = rng.random_range(50.0..200.0);
        let period = rng.random_range(30.0..90.0);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let clean = |t: usize| amplitude * (std::f64::consts::TAU * t as f64 / period + phase).sin();
        let poses: BTreeMap<usize, Pose3D> = (0..100)
            .map(|t| {
                let p = Point3::new(clean(t) + noise.sample(&mut rng), noise.sample(&mut rng), 1000.0 + noise.sample(&mut rng));
                (t, Pose3D::from_joints(vec![Some(p)]))
            })
            .collect();
        let track = Track { id: 0, poses };
        let smoothed = smooth_track(&track, &cfg);
        let rmse = |tr: &Track| {
            let sse: f64 = tr
                .poses
                .iter()
                .map(|(&t, p)| (p.joints[0].unwrap() - Point3::new(clean(t), 0.0, 1000.0)).norm_squared())
                .sum();
            (sse / tr.len() as f64).sqrt()
        };
        assert!(rmse(&smoothed) < rmse(&track), "trial {trial}");
    }
}
