use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix3, Vector2, Vector3};
use proptest::prelude::*;
use ptzcap_core::camera::{
    axis_angle, camera_angles, camera_rotation, euler_to_matrix, look_at_with_fov_shift, matrix_to_euler, project,
    CameraIntrinsics, EulerAngles,
};
use ptzcap_core::metrics::{
    center_of_mass, fore_aft, hip_flexion, hip_joints, knee_flexion, lean_angle, mpjpe, outside_leg, MpjpeMode, Side,
};
use ptzcap_core::motion_basis::CosineBasis;
use ptzcap_core::skeleton::{rest_pose, SkeletonModel};
use ptzcap_core::trajectory::PoseTrajectory;

fn angles() -> impl Strategy<Value = EulerAngles> {
    // Pitch stays clear of +-90 degrees, where roll and yaw are not separable.
    (-PI + 1e-6..PI - 1e-6, -FRAC_PI_2 + 1e-3..FRAC_PI_2 - 1e-3, -PI + 1e-6..PI - 1e-6)
        .prop_map(|(y, p, r)| EulerAngles::new(y, p, r))
}

fn unit_vector() -> impl Strategy<Value = Vector3<f64>> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("nonzero", |(x, y, z)| x * x + y * y + z * z > 1e-4)
        .prop_map(|(x, y, z)| Vector3::new(x, y, z).normalize())
}

fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).norm()
}

proptest! {
    #[test]
    fn euler_round_trip(a in angles()) {
        let back = matrix_to_euler(&euler_to_matrix(a));
        prop_assert!(!back.gimbal_lock);
        for (x, y) in a.to_array().iter().zip(back.angles.to_array()) {
            prop_assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
    }

    #[test]
    fn camera_angles_round_trip(a in angles()) {
        let back = camera_angles(&camera_rotation(a)).angles;
        for (x, y) in a.to_array().iter().zip(back.to_array()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn rotations_are_orthonormal(a in angles()) {
        prop_assert!(orthonormality_error(&euler_to_matrix(a)) < 1e-12);
        prop_assert!(orthonormality_error(&camera_rotation(a)) < 1e-12);
        prop_assert!((camera_rotation(a).determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn basis_fit_is_exact_with_full_basis(values in prop::collection::vec(-50.0..50.0f64, 2..40)) {
        let n = values.len();
        let basis = CosineBasis::new(n, n).unwrap();
        let c = basis.fit(&values).unwrap();
        let mut back = vec![0.0; n];
        basis.evaluate_into(c.as_slice(), &mut back);
        for (x, y) in values.iter().zip(&back) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn look_at_places_target_on_subject_pixel(
        dir in unit_vector(),
        dist in 5.0..200.0f64,
        target in (-50.0..50.0f64, -50.0..50.0f64, 0.0..5.0f64),
        sx in 0.05..0.95f64,
        sy in 0.05..0.95f64,
    ) {
        prop_assume!(dir.z.abs() < 0.95);
        let intr = CameraIntrinsics::from_focal(3000.0, 3000.0, 960.0, 540.0, 1920.0, 1080.0).unwrap();
        let target = Vector3::new(target.0, target.1, target.2);
        let cam = target + dir * dist;
        let subject = Vector2::new(sx, sy);
        let extr = look_at_with_fov_shift(&cam, &target, &Vector3::z(), &intr, &subject).unwrap();
        let px = project(&target, &intr, &extr).unwrap();
        let want = Vector2::new(sx * 1920.0, sy * 1080.0);
        prop_assert!((px - want).norm() < 1e-6, "{px:?} vs {want:?}");
        prop_assert!(orthonormality_error(&extr.rotation) < 1e-12);
        let centered = look_at_with_fov_shift(&cam, &target, &Vector3::z(), &intr, &Vector2::new(0.5, 0.5)).unwrap();
        let px = project(&target, &intr, &centered).unwrap();
        prop_assert!((px - Vector2::new(960.0, 540.0)).norm() < 1e-6);
        // Centered look-at has no roll: world vertical stays in the camera's y-z plane.
        let up_cam = centered.rotation * Vector3::z();
        prop_assert!(up_cam.x.abs() < 1e-9, "{up_cam:?}");
    }
}

fn perturbed_pose(seed: [f64; 72]) -> Vec<Vector3<f64>> {
    rest_pose()
        .iter()
        .enumerate()
        .map(|(j, p)| p + 0.08 * Vector3::new(seed[3 * j], seed[3 * j + 1], seed[3 * j + 2]))
        .collect()
}

fn angle_metrics(pose: &[Vector3<f64>], skel: &SkeletonModel) -> Vec<f64> {
    let com = center_of_mass(pose, skel, None).unwrap();
    let outside = outside_leg(pose, skel).unwrap();
    let mut v = Vec::new();
    for side in [Side::Right, Side::Left] {
        v.push(knee_flexion(pose, skel, side).unwrap());
        v.push(hip_flexion(pose, skel, side).unwrap());
    }
    v.push(lean_angle(pose, skel, &com, outside).unwrap());
    let (angle, dist) = fore_aft(pose, skel, &com, outside).unwrap();
    v.push(angle);
    v.push(dist);
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn angle_metrics_are_rigid_invariant(
        noise in prop::array::uniform32(-1.0..1.0f64),
        more in prop::array::uniform32(-1.0..1.0f64),
        rest in prop::array::uniform8(-1.0..1.0f64),
        axis in unit_vector(),
        angle in 0.0..PI,
        t in (-100.0..100.0f64, -100.0..100.0f64, -10.0..10.0f64),
    ) {
        let mut seed = [0.0; 72];
        seed[..32].copy_from_slice(&noise);
        seed[32..64].copy_from_slice(&more);
        seed[64..].copy_from_slice(&rest);
        let skel = SkeletonModel::default_skier();
        let pose = perturbed_pose(seed);
        let r = axis_angle(&axis, angle);
        let t = Vector3::new(t.0, t.1, t.2);
        let moved: Vec<_> = pose.iter().map(|p| r * p + t).collect();
        for (a, b) in angle_metrics(&pose, &skel).iter().zip(angle_metrics(&moved, &skel)) {
            prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn centered_mpjpe_ignores_per_frame_translation(
        noise in prop::array::uniform32(-1.0..1.0f64),
        shifts in prop::collection::vec((-30.0..30.0f64, -30.0..30.0f64, -3.0..3.0f64), 3),
    ) {
        let skel = SkeletonModel::default_skier();
        let hips = hip_joints(&skel).unwrap();
        let mut seed = [0.0; 72];
        seed[..32].copy_from_slice(&noise);
        let gt_frames: Vec<Vec<Vector3<f64>>> = (0..3).map(|_| rest_pose().to_vec()).collect();
        let pred_frames: Vec<Vec<Vector3<f64>>> = (0..3).map(|_| perturbed_pose(seed)).collect();
        let shifted: Vec<Vec<Vector3<f64>>> = pred_frames
            .iter()
            .zip(&shifts)
            .map(|(f, s)| f.iter().map(|p| p + Vector3::new(s.0, s.1, s.2)).collect())
            .collect();
        let gt = PoseTrajectory::from_frames(&gt_frames);
        let a = mpjpe(&PoseTrajectory::from_frames(&pred_frames), &gt, MpjpeMode::Centered, None, hips).unwrap();
        let b = mpjpe(&PoseTrajectory::from_frames(&shifted), &gt, MpjpeMode::Centered, None, hips).unwrap();
        for (x, y) in a.report.series.iter().zip(&b.report.series) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn global_mpjpe_ignores_frame_order(noise in prop::array::uniform32(-1.0..1.0f64)) {
        let skel = SkeletonModel::default_skier();
        let hips = hip_joints(&skel).unwrap();
        let frames: Vec<Vec<Vector3<f64>>> = (0..4)
            .map(|k| {
                let mut seed = [0.0; 72];
                for (i, v) in noise.iter().enumerate() {
                    seed[(i * 2 + k * 5) % 72] = *v;
                }
                perturbed_pose(seed)
            })
            .collect();
        let gt_frames: Vec<Vec<Vector3<f64>>> = (0..4).map(|k| {
            rest_pose().iter().map(|p| p + Vector3::new(k as f64, 0.0, 0.0)).collect()
        }).collect();
        let order = [2, 0, 3, 1];
        let pf: Vec<_> = order.iter().map(|&i| frames[i].clone()).collect();
        let gf: Vec<_> = order.iter().map(|&i| gt_frames[i].clone()).collect();
        let a = mpjpe(&PoseTrajectory::from_frames(&frames), &PoseTrajectory::from_frames(&gt_frames), MpjpeMode::Global, None, hips).unwrap();
        let b = mpjpe(&PoseTrajectory::from_frames(&pf), &PoseTrajectory::from_frames(&gf), MpjpeMode::Global, None, hips).unwrap();
        prop_assert!((a.report.mean - b.report.mean).abs() < 1e-12);
    }
}
