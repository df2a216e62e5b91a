//! Fixtures checked against independently computed values.

use nalgebra::{Matrix3, Vector2, Vector3};
use ptzcap_core::camera::{axis_angle, matrix_to_euler, CameraIntrinsics};
use ptzcap_core::energy::{EnergyWeights, Objective, RotationModel, TrackParam};
use ptzcap_core::metrics::{
    center_of_mass, hip_joints, knee_flexion, lean_angle, mpjpe, pck, speed_series, MpjpeMode, Side,
};
use ptzcap_core::rotation_from_background::{
    estimate_rotation_deltas, fit_homography_dlt, fit_homography_ransac, refine_rotation, HomographyError,
    PointPair, RansacConfig,
};
use ptzcap_core::skeleton::{rest_pose, SkeletonDefinition, SkeletonModel};
use ptzcap_core::solver::range_centers;
use ptzcap_core::synth::{generate_scene_with, SynthConfig};
use ptzcap_core::trajectory::PoseTrajectory;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn toy_skeleton() -> SkeletonModel {
    let def = SkeletonDefinition {
        joints: ["a", "b", "c"].map(String::from).to_vec(),
        body_subset: Vec::new(),
        limbs: vec![("a".into(), "b".into()), ("b".into(), "c".into())],
        lengths_m: vec![(("a".into(), "b".into()), 1.0), (("b".into(), "c".into()), 2.0)],
        com_weights: vec![(vec!["a".into(), "b".into()], 0.25), (vec!["b".into(), "c".into()], 0.75)],
    };
    SkeletonModel::from_definition(&def).unwrap()
}

#[test]
fn com_of_two_limbs_by_hand() {
    let pose = [Vector3::new(0.0, 0.0, 0.0), Vector3::new(1.0, 0.0, 0.0), Vector3::new(1.0, 2.0, 0.0)];
    // Midpoints (0.5, 0, 0) and (1, 1, 0), weighted 1:3.
    let com = center_of_mass(&pose, &toy_skeleton(), None).unwrap();
    assert!((com - Vector3::new(0.875, 0.75, 0.0)).norm() < 1e-15);
}

#[test]
fn com_of_mirrored_pose_is_on_the_mirror_plane() {
    let skel = SkeletonModel::default_skier();
    let mut pose = rest_pose().to_vec();
    // The rest pose is mirror-symmetric about y = 0; move it so the plane is x = 0.
    for p in &mut pose {
        *p = Vector3::new(p.y, -p.x, p.z);
    }
    assert!(center_of_mass(&pose, &skel, None).unwrap().x.abs() < 1e-12);
    assert_eq!(center_of_mass(&vec![Vector3::zeros(); 24], &skel, None).unwrap(), Vector3::zeros());
}

#[test]
fn knee_flexion_matches_atan2_oracle() {
    let skel = SkeletonModel::default_skier();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let j = |n: &str| skel.joint_index(n).unwrap();
    for _ in 0..100 {
        let mut pose = rest_pose().to_vec();
        for p in &mut pose {
            *p += Vector3::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2));
        }
        let a = pose[j("hip_l")] - pose[j("knee_l")];
        let b = pose[j("ankle_l")] - pose[j("knee_l")];
        let oracle = a.cross(&b).norm().atan2(a.dot(&b)).to_degrees();
        let got = knee_flexion(&pose, &skel, Side::Left).unwrap();
        assert!((got - oracle).abs() < 1e-9, "{got} vs {oracle}");
    }
}

#[test]
fn lean_of_constructed_com() {
    let skel = SkeletonModel::default_skier();
    let pose = rest_pose().to_vec();
    let j = |n: &str| skel.joint_index(n).unwrap();
    let center = 0.5 * (pose[j("ankle_l")] + pose[j("ankle_r")]);
    let at = |deg: f64| {
        let r = deg.to_radians();
        lean_angle(&pose, &skel, &(center + Vector3::new(0.4, r.sin(), r.cos())), Side::Left).unwrap()
    };
    assert!(at(0.0).abs() < 1e-9);
    assert!((at(30.0) - 30.0).abs() < 1e-9);
    assert!((at(90.0) - 90.0).abs() < 1e-9);
}

#[test]
fn speed_of_sinusoid_matches_direct_convolution() {
    let com: Vec<Vector3<f64>> = (0..60)
        .map(|f| {
            let t = f as f64 / 50.0;
            Vector3::new(17.0 * t, 2.0 * (3.0 * t).sin(), 0.1 * (7.0 * t).cos())
        })
        .collect();
    let sigma: f64 = 1.5;
    let radius = (4.0 * sigma).ceil() as isize;
    let smooth = |f: isize| -> Vector3<f64> {
        let (mut acc, mut w) = (Vector3::zeros(), 0.0);
        for k in -radius..=radius {
            let i = f + k;
            if i >= 0 && (i as usize) < com.len() {
                let g = (-(k * k) as f64 / (2.0 * sigma * sigma)).exp();
                acc += g * com[i as usize];
                w += g;
            }
        }
        acc / w
    };
    let speeds = speed_series(&com, 50.0, sigma).unwrap();
    assert_eq!(speeds.len(), 59);
    for (f, v) in speeds.iter().enumerate() {
        let oracle = (smooth(f as isize + 1) - smooth(f as isize)).norm() * 50.0;
        assert!((v - oracle).abs() < 1e-10);
    }
    let still = vec![Vector3::new(1.0, 2.0, 3.0); 10];
    assert!(speed_series(&still, 50.0, sigma).unwrap().iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn pck_extremes() {
    let gt: Vec<Vec<Option<Vector2<f64>>>> =
        vec![vec![Some(Vector2::new(0.0, 0.0)), Some(Vector2::new(0.0, 10.0)), Some(Vector2::new(5.0, 5.0))]];
    assert_eq!(pck(&gt, &gt, 0, 1, 1.0, None).unwrap().percentage, 100.0);
    let far: Vec<Vec<Option<Vector2<f64>>>> =
        vec![gt[0].iter().map(|p| p.map(|q| q + Vector2::new(20.0, 0.0))).collect()];
    assert_eq!(pck(&far, &gt, 0, 1, 1.0, None).unwrap().percentage, 0.0);
    // The doubled radius keeps a 15 px error inside.
    let near: Vec<Vec<Option<Vector2<f64>>>> =
        vec![gt[0].iter().map(|p| p.map(|q| q + Vector2::new(15.0, 0.0))).collect()];
    assert_eq!(pck(&near, &gt, 0, 1, 2.0, None).unwrap().percentage, 100.0);
}

#[test]
fn mpjpe_modes_on_scaled_and_shifted_poses() {
    let skel = SkeletonModel::default_skier();
    let hips = hip_joints(&skel).unwrap();
    let gt_pose = rest_pose().to_vec();
    let hip = 0.5 * (gt_pose[hips.0] + gt_pose[hips.1]);
    let gt = PoseTrajectory::from_frames(&[gt_pose.clone()]);
    let scaled = PoseTrajectory::from_frames(&[gt_pose.iter().map(|p| hip + 1.3 * (p - hip)).collect()]);
    let m = |pred: &PoseTrajectory, mode| mpjpe(pred, &gt, mode, None, hips).unwrap().report.mean;
    assert!(m(&scaled, MpjpeMode::Normalized) < 1e-12);
    assert!(m(&scaled, MpjpeMode::Centered) > 0.01);
    let v = Vector3::new(0.3, -0.4, 1.2);
    let shifted = PoseTrajectory::from_frames(&[gt_pose.iter().map(|p| p + v).collect()]);
    assert!((m(&shifted, MpjpeMode::Global) - v.norm()).abs() < 1e-12);
    assert!(m(&shifted, MpjpeMode::Centered) < 1e-12);
    for mode in [MpjpeMode::Global, MpjpeMode::Centered, MpjpeMode::Normalized] {
        assert_eq!(m(&gt, mode), 0.0);
    }
}

fn rotation_pairs(rng: &mut ChaCha8Rng, k: &Matrix3<f64>, r: &Matrix3<f64>, n: usize) -> Vec<PointPair> {
    let k_inv = k.try_inverse().unwrap();
    (0..n)
        .map(|_| {
            let s = Vector2::new(rng.random_range(0.0..1920.0), rng.random_range(0.0..1080.0));
            let q = k * r * k_inv * s.push(1.0);
            PointPair::new(s, Vector2::new(q.x / q.z, q.y / q.z))
        })
        .collect()
}

#[test]
fn refinement_keeps_exact_rotations() {
    let k = *CameraIntrinsics::from_focal(5000.0, 5000.0, 960.0, 540.0, 1920.0, 1080.0).unwrap().k();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let r = axis_angle(&Vector3::new(0.3, -1.0, 0.2), 0.8f64.to_radians());
    let pairs = rotation_pairs(&mut rng, &k, &r, 20);
    let start = axis_angle(&Vector3::new(1.0, 0.0, 0.0), 0.01) * r;
    let refined = refine_rotation(&pairs, &k, &k, &start).unwrap();
    assert!((refined - r).norm() < 1e-12);
}

#[test]
fn ransac_without_consensus_fails() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for seed in 0..100u64 {
        let pairs: Vec<PointPair> = (0..12)
            .map(|_| {
                PointPair::new(
                    Vector2::new(rng.random_range(0.0..1920.0), rng.random_range(0.0..1080.0)),
                    Vector2::new(rng.random_range(0.0..1920.0), rng.random_range(0.0..1080.0)),
                )
            })
            .collect();
        let cfg = RansacConfig {
            seed,
            ..RansacConfig::default()
        };
        assert!(matches!(fit_homography_ransac(&pairs, &cfg, 0), Err(HomographyError::NoConsensus { .. })));
    }
}

#[test]
fn ransac_on_clean_data_equals_dlt() {
    let k = *CameraIntrinsics::from_focal(3000.0, 3000.0, 960.0, 540.0, 1920.0, 1080.0).unwrap().k();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let r = axis_angle(&Vector3::new(0.0, 1.0, 0.1), 0.5f64.to_radians());
    let pairs = rotation_pairs(&mut rng, &k, &r, 30);
    let fit = fit_homography_ransac(&pairs, &RansacConfig::default(), 0).unwrap();
    assert_eq!(fit.inlier_count(), 30);
    let dlt = fit_homography_dlt(&pairs).unwrap();
    assert!((fit.homography - dlt).norm() < 1e-12 * dlt.norm());
}

#[test]
fn ransac_finds_inliers_at_two_pixel_threshold() {
    let k = *CameraIntrinsics::from_focal(3000.0, 3000.0, 960.0, 540.0, 1920.0, 1080.0).unwrap().k();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cfg = RansacConfig {
        threshold_px: 2.0,
        ..RansacConfig::default()
    };
    for trial in 0..20 {
        let r = axis_angle(&Vector3::new(rng.random(), rng.random(), rng.random()), 1f64.to_radians());
        let mut pairs = rotation_pairs(&mut rng, &k, &r, 70);
        for _ in 0..30 {
            let s = Vector2::new(rng.random_range(0.0..1920.0), rng.random_range(0.0..1080.0));
            let d = Vector2::new(rng.random_range(0.0..1920.0), rng.random_range(0.0..1080.0));
            pairs.push(PointPair::new(s, d));
        }
        let fit = fit_homography_ransac(&pairs, &cfg, trial).unwrap();
        let found = fit.inliers[..70].iter().filter(|b| **b).count();
        assert!(found >= 67, "trial {trial}: {found}/70");
    }
}

#[test]
fn noise_free_scene_deltas_match_ground_truth() {
    let scene = generate_scene_with(&SynthConfig {
        n_frames: 40,
        ..SynthConfig::default()
    })
    .unwrap();
    let est = estimate_rotation_deltas(&scene.correspondences, &scene.uncalibrated_rig(), &RansacConfig::default(), false);
    assert_eq!(est.deltas, est.raw);
    for c in 0..scene.config.n_cameras {
        for f in 0..39 {
            let pts = scene.correspondences.get(c, f);
            let h = fit_homography_dlt(pts).unwrap();
            let k = scene.rig.camera(c).intrinsics_at(f).k();
            let oracle = k * scene.gt_deltas.cameras[c][f].rotation * k.try_inverse().unwrap();
            assert!((h / h[(2, 2)] - oracle / oracle[(2, 2)]).norm() < 1e-8);
            let got = matrix_to_euler(&est.raw.cameras[c][f].rotation).angles.to_array();
            let want = matrix_to_euler(&scene.gt_deltas.cameras[c][f].rotation).angles.to_array();
            for a in 0..3 {
                assert!((got[a] - want[a]).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn composed_deltas_reproduce_the_last_rotation() {
    let scene = generate_scene_with(&SynthConfig {
        n_frames: 60,
        ..SynthConfig::default()
    })
    .unwrap();
    for (c, track) in scene.gt_rotation_tracks.iter().enumerate() {
        let integrated = scene.gt_deltas.integrate(c, track[0]);
        assert!((integrated[59] - track[59]).norm() < 1e-10);
    }
}

#[test]
fn ground_truth_has_zero_energy() {
    let scene = generate_scene_with(&SynthConfig {
        n_frames: 30,
        ..SynthConfig::default()
    })
    .unwrap();
    let nf = 30;
    let pose = TrackParam::cosine(nf, nf).unwrap();
    let x = pose.fit(&scene.gt_trajectory.to_channels()).unwrap();
    let obj = Objective::new(
        &scene.observations,
        &scene.rig,
        &scene.skeleton,
        EnergyWeights::calibrated(),
        pose.clone(),
        RotationModel::Known(&scene.gt_rotation_tracks),
    )
    .unwrap();
    assert!(obj.energy(&x).unwrap().total < 1e-10);

    let cam = TrackParam::cosine(nf, nf).unwrap();
    let mut xe = x.clone();
    xe.extend(cam.fit(&ptzcap_core::solver::unwrapped_angles(&scene.gt_rotation_tracks)).unwrap());
    let rig = scene.uncalibrated_rig();
    let obj = Objective::new(
        &scene.observations,
        &rig,
        &scene.skeleton,
        EnergyWeights::uncalibrated(),
        pose,
        RotationModel::Estimated {
            param: cam,
            deltas: Some(&scene.gt_deltas),
        },
    )
    .unwrap();
    assert!(obj.energy(&xe).unwrap().total < 1e-10);
}

#[test]
fn range_initializer_finds_the_athlete() {
    let scene = generate_scene_with(&SynthConfig::default()).unwrap();
    let centers = range_centers(&scene.observations, &scene.uncalibrated_rig(), &scene.skeleton).unwrap();
    let truth = scene.gt_trajectory.centroids();
    let worst = centers
        .iter()
        .zip(&truth)
        .map(|(a, b)| (a.xy() - b.xy()).norm())
        .fold(0.0, f64::max);
    // Cameras stand 50 m from the track; a few meters is enough to start from.
    assert!(worst < 3.0, "{worst}");
}
