//! Pinhole camera model and orientation parametrization.
//!
//! Extrinsics follow `P_cam = R * P_world + t`, with the camera looking
//! along its +z axis, x to the right and y down in the image.
//!
//! Orientations are described by yaw-pitch-roll Euler angles composed as
//! `E = Rz(yaw) * Ry(pitch) * Rx(roll)`. For cameras, `E` rotates a body
//! frame (x forward along the optical axis, y left, z up) into the world,
//! so yaw pans about the world z axis, pitch tilts (positive looks down)
//! and roll spins about the optical axis. The world-to-camera rotation is
//! `CAMERA_FROM_BODY * E^T`; all-zero angles look along world +x with the
//! world +z axis pointing up in the image.

#[allow(unused_imports)]
use num_traits::Float;
use nalgebra::{Matrix3, Matrix3x4, Vector2, Vector3};
use thiserror::Error;

/// Minimum camera-frame depth for a point to count as in front.
pub const MIN_DEPTH: f64 = 1e-6;

/// Half-width of the pitch band around +-pi/2 treated as gimbal lock.
pub const GIMBAL_TOLERANCE: f64 = 1e-6;

/// Maps body-frame coordinates (x forward, y left, z up) to camera
/// coordinates (x right, y down, z forward).
pub const CAMERA_FROM_BODY: Matrix3<f64> =
    Matrix3::new(0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum CameraError {
    #[error("point is behind the camera (depth {depth})")]
    BehindCamera { depth: f64 },
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(&'static str),
    #[error("up vector is parallel to the viewing direction")]
    DegenerateUp,
    #[error("camera position coincides with the target")]
    CoincidentTarget,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    k: Matrix3<f64>,
    k_inv: Matrix3<f64>,
    width: f64,
    height: f64,
}

impl CameraIntrinsics {
    /// Validates an upper-triangular calibration matrix.
    pub fn new(k: Matrix3<f64>, width: f64, height: f64) -> Result<Self, CameraError> {
        if !(width > 0.0 && height > 0.0) {
            return Err(CameraError::InvalidIntrinsics("image size must be positive"));
        }
        if k.iter().any(|v| !v.is_finite()) {
            return Err(CameraError::InvalidIntrinsics("non-finite entry"));
        }
        if k[(1, 0)] != 0.0 || k[(2, 0)] != 0.0 || k[(2, 1)] != 0.0 {
            return Err(CameraError::InvalidIntrinsics("K must be upper triangular"));
        }
        if !(k[(0, 0)] > 0.0 && k[(1, 1)] > 0.0) {
            return Err(CameraError::InvalidIntrinsics("focal lengths must be positive"));
        }
        if k[(2, 2)] == 0.0 {
            return Err(CameraError::InvalidIntrinsics("K is singular"));
        }
        // normalize so K[2][2] = 1
        let k = k / k[(2, 2)];
        let (cx, cy) = (k[(0, 2)], k[(1, 2)]);
        if !(0.0..=width).contains(&cx) || !(0.0..=height).contains(&cy) {
            return Err(CameraError::InvalidIntrinsics(
                "principal point outside the image",
            ));
        }
        let k_inv = k
            .try_inverse()
            .ok_or(CameraError::InvalidIntrinsics("K is singular"))?;
        Ok(Self {
            k,
            k_inv,
            width,
            height,
        })
    }

    /// Zero-skew intrinsics.
    pub fn from_focal(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: f64,
        height: f64,
    ) -> Result<Self, CameraError> {
        Self::new(
            Matrix3::new(fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0),
            width,
            height,
        )
    }

    pub fn k(&self) -> &Matrix3<f64> {
        &self.k
    }

    pub fn k_inv(&self) -> &Matrix3<f64> {
        &self.k_inv
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn focal(&self) -> (f64, f64) {
        (self.k[(0, 0)], self.k[(1, 1)])
    }

    pub fn principal_point(&self) -> Vector2<f64> {
        Vector2::new(self.k[(0, 2)], self.k[(1, 2)])
    }

    /// Horizontal and vertical field of view in radians.
    pub fn field_of_view(&self) -> (f64, f64) {
        let (fx, fy) = self.focal();
        (
            2.0 * (0.5 * self.width / fx).atan(),
            2.0 * (0.5 * self.height / fy).atan(),
        )
    }

    pub fn contains(&self, px: &Vector2<f64>) -> bool {
        px.x >= 0.0 && px.y >= 0.0 && px.x <= self.width && px.y <= self.height
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraExtrinsics {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl CameraExtrinsics {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    /// Extrinsics of a camera located at `center` (world coordinates).
    pub fn from_center(rotation: Matrix3<f64>, center: &Vector3<f64>) -> Self {
        Self {
            rotation,
            translation: -(rotation * center),
        }
    }

    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    pub fn to_camera(&self, p_world: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p_world + self.translation
    }

    /// The 3x4 matrix `K [R | t]`.
    pub fn projection_matrix(&self, intr: &CameraIntrinsics) -> Matrix3x4<f64> {
        let mut rt = Matrix3x4::zeros();
        rt.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        rt.set_column(3, &self.translation);
        intr.k() * rt
    }
}

/// Projects a world point to pixel coordinates.
pub fn project(
    p_world: &Vector3<f64>,
    intr: &CameraIntrinsics,
    extr: &CameraExtrinsics,
) -> Result<Vector2<f64>, CameraError> {
    let pc = extr.to_camera(p_world);
    if pc.z <= MIN_DEPTH {
        return Err(CameraError::BehindCamera { depth: pc.z });
    }
    let h = intr.k() * pc;
    Ok(Vector2::new(h.x / h.z, h.y / h.z))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAngles {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl EulerAngles {
    pub fn new(yaw: f64, pitch: f64, roll: f64) -> Self {
        Self { yaw, pitch, roll }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.yaw, self.pitch, self.roll]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Result of decomposing a rotation into Euler angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerDecomposition {
    pub angles: EulerAngles,
    /// Pitch is within [`GIMBAL_TOLERANCE`] of +-pi/2. Roll is then fixed
    /// to zero and yaw absorbs the remaining rotation about z.
    pub gimbal_lock: bool,
}

fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn d_rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(0.0, 0.0, 0.0, 0.0, -s, -c, 0.0, c, -s)
}

fn d_rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(-s, 0.0, c, 0.0, 0.0, 0.0, -c, 0.0, -s)
}

fn d_rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(-s, -c, 0.0, c, -s, 0.0, 0.0, 0.0, 0.0)
}

/// `Rz(yaw) * Ry(pitch) * Rx(roll)`.
pub fn euler_to_matrix(a: EulerAngles) -> Matrix3<f64> {
    rot_z(a.yaw) * rot_y(a.pitch) * rot_x(a.roll)
}

/// Partial derivatives of [`euler_to_matrix`] with respect to yaw, pitch
/// and roll.
pub fn euler_partials(a: EulerAngles) -> [Matrix3<f64>; 3] {
    let (z, y, x) = (rot_z(a.yaw), rot_y(a.pitch), rot_x(a.roll));
    [
        d_rot_z(a.yaw) * y * x,
        z * d_rot_y(a.pitch) * x,
        z * y * d_rot_x(a.roll),
    ]
}

/// Inverse of [`euler_to_matrix`] on the principal branch
/// (yaw, roll in (-pi, pi], pitch in [-pi/2, pi/2]).
pub fn matrix_to_euler(r: &Matrix3<f64>) -> EulerDecomposition {
    let cos_pitch = (r[(0, 0)] * r[(0, 0)] + r[(1, 0)] * r[(1, 0)]).sqrt();
    let pitch = (-r[(2, 0)]).atan2(cos_pitch);
    if cos_pitch < GIMBAL_TOLERANCE.sin() {
        let yaw = (-r[(0, 1)]).atan2(r[(1, 1)]);
        return EulerDecomposition {
            angles: EulerAngles::new(yaw, pitch, 0.0),
            gimbal_lock: true,
        };
    }
    EulerDecomposition {
        angles: EulerAngles::new(
            r[(1, 0)].atan2(r[(0, 0)]),
            pitch,
            r[(2, 1)].atan2(r[(2, 2)]),
        ),
        gimbal_lock: false,
    }
}

/// World-to-camera rotation for camera orientation angles.
pub fn camera_rotation(a: EulerAngles) -> Matrix3<f64> {
    CAMERA_FROM_BODY * euler_to_matrix(a).transpose()
}

/// Partial derivatives of [`camera_rotation`].
pub fn camera_rotation_partials(a: EulerAngles) -> [Matrix3<f64>; 3] {
    euler_partials(a).map(|d| CAMERA_FROM_BODY * d.transpose())
}

/// Camera orientation angles of a world-to-camera rotation.
pub fn camera_angles(r: &Matrix3<f64>) -> EulerDecomposition {
    matrix_to_euler(&(CAMERA_FROM_BODY.transpose() * r).transpose())
}

/// Rotation about `axis` (unit vector) by `angle` via the Rodrigues formula.
pub fn axis_angle(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let k = axis.normalize();
    let kx = k.cross_matrix();
    Matrix3::identity() + kx * angle.sin() + kx * kx * (1.0 - angle.cos())
}

/// Look-at orientation whose target projects onto `subject_px` instead of
/// the principal point.
///
/// `subject_px` is in normalized image coordinates (0..1 of width and
/// height). The centered look-at rotation is panned about the camera's
/// vertical axis and then tilted about its horizontal axis, opposite to the
/// subject's offset, so that the target appears where the subject was
/// observed.
pub fn look_at_with_fov_shift(
    cam_pos: &Vector3<f64>,
    target: &Vector3<f64>,
    up: &Vector3<f64>,
    intr: &CameraIntrinsics,
    subject_px: &Vector2<f64>,
) -> Result<CameraExtrinsics, CameraError> {
    let view = target - cam_pos;
    let dist = view.norm();
    if !(dist > 1e-12) {
        return Err(CameraError::CoincidentTarget);
    }
    let forward = view / dist;
    let right = forward.cross(up);
    if right.norm() < 1e-9 * up.norm().max(1e-300) {
        return Err(CameraError::DegenerateUp);
    }
    let right = right.normalize();
    let down = forward.cross(&right);
    let centered = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);

    let px = Vector3::new(
        subject_px.x * intr.width(),
        subject_px.y * intr.height(),
        1.0,
    );
    let ray = intr.k_inv() * px;
    let (a, b) = (ray.x / ray.z, ray.y / ray.z);
    let tilt = -b.atan();
    let pan = (a * tilt.cos()).atan();
    let rotation = rot_x(tilt) * rot_y(pan) * centered;
    Ok(CameraExtrinsics::from_center(rotation, cam_pos))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;

    fn simple_intrinsics() -> CameraIntrinsics {
        CameraIntrinsics::from_focal(1000.0, 1000.0, 500.0, 500.0, 1000.0, 1000.0).unwrap()
    }

    #[test]
    fn optical_axis_hits_principal_point() {
        let intr = simple_intrinsics();
        let extr = CameraExtrinsics::new(Matrix3::identity(), Vector3::zeros());
        let p = project(&Vector3::new(0.0, 0.0, 10.0), &intr, &extr).unwrap();
        assert_eq!(p, Vector2::new(500.0, 500.0));
        let p = project(&Vector3::new(1.0, 0.0, 10.0), &intr, &extr).unwrap();
        assert!((p - Vector2::new(600.0, 500.0)).norm() < 1e-12);
    }

    #[test]
    fn behind_camera_is_an_error() {
        let intr = simple_intrinsics();
        let extr = CameraExtrinsics::new(Matrix3::identity(), Vector3::zeros());
        assert!(matches!(
            project(&Vector3::new(0.0, 0.0, -1.0), &intr, &extr),
            Err(CameraError::BehindCamera { .. })
        ));
    }

    #[test]
    fn invalid_intrinsics() {
        assert!(CameraIntrinsics::from_focal(-1.0, 1.0, 1.0, 1.0, 2.0, 2.0).is_err());
        assert!(CameraIntrinsics::from_focal(1.0, 1.0, 5.0, 1.0, 2.0, 2.0).is_err());
        assert!(CameraIntrinsics::from_focal(1.0, 1.0, 1.0, 1.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn zero_angles_give_identity() {
        assert_eq!(euler_to_matrix(EulerAngles::default()), Matrix3::identity());
    }

    #[test]
    fn yaw_quarter_turn_matches_rodrigues() {
        let r = euler_to_matrix(EulerAngles::new(FRAC_PI_2, 0.0, 0.0));
        let oracle = axis_angle(&Vector3::z(), FRAC_PI_2);
        assert!((r - oracle).norm() < 1e-15);
    }

    #[test]
    fn gimbal_lock_is_flagged() {
        let r = euler_to_matrix(EulerAngles::new(0.3, FRAC_PI_2, 0.2));
        let d = matrix_to_euler(&r);
        assert!(d.gimbal_lock);
        assert_eq!(d.angles.roll, 0.0);
        // yaw absorbs roll: yaw - roll is what survives at pitch = +pi/2
        assert!((euler_to_matrix(d.angles) - r).norm() < 1e-9);
        assert!((d.angles.yaw - 0.1).abs() < 1e-9);
    }

    #[test]
    fn camera_rotation_zero_looks_along_x() {
        let r = camera_rotation(EulerAngles::default());
        // optical axis (camera z) is world +x, image down is world -z
        assert!((r.row(2).transpose() - Vector3::x()).norm() < 1e-15);
        assert!((r.row(1).transpose() + Vector3::z()).norm() < 1e-15);
        assert!((r.determinant() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn camera_angles_round_trip() {
        let a = EulerAngles::new(2.5, -0.3, 0.05);
        let back = camera_angles(&camera_rotation(a)).angles;
        assert!((back.yaw - a.yaw).abs() < 1e-12);
        assert!((back.pitch - a.pitch).abs() < 1e-12);
        assert!((back.roll - a.roll).abs() < 1e-12);
    }

    #[test]
    fn camera_partials_match_finite_differences() {
        let a = [0.7, -0.2, 0.1];
        let analytic = camera_rotation_partials(EulerAngles::from_array(a));
        let h = 1e-6;
        for k in 0..3 {
            let (mut ap, mut am) = (a, a);
            ap[k] += h;
            am[k] -= h;
            let fd = (camera_rotation(EulerAngles::from_array(ap))
                - camera_rotation(EulerAngles::from_array(am)))
                / (2.0 * h);
            assert!((fd - analytic[k]).norm() < 1e-9);
        }
    }

    #[test]
    fn look_at_centered_subject() {
        let intr = simple_intrinsics();
        let cam = Vector3::new(10.0, -20.0, 5.0);
        let target = Vector3::new(0.0, 0.0, 1.0);
        let extr =
            look_at_with_fov_shift(&cam, &target, &Vector3::z(), &intr, &Vector2::new(0.5, 0.5))
                .unwrap();
        let p = project(&target, &intr, &extr).unwrap();
        assert!((p - intr.principal_point()).norm() < 1e-6);
        // centered look-at with z up has zero roll in camera angles
        let angles = camera_angles(&extr.rotation).angles;
        assert!(angles.roll.abs() < 1e-12);
    }

    #[test]
    fn look_at_pans_opposite_to_subject_offset() {
        // horizontal field of view of 10 degrees
        let (w, h) = (1920.0, 1080.0);
        let fx = 0.5 * w / (5.0f64.to_radians()).tan();
        let intr = CameraIntrinsics::from_focal(fx, fx, w / 2.0, h / 2.0, w, h).unwrap();
        let cam = Vector3::new(0.0, 0.0, 2.0);
        let target = Vector3::new(40.0, 3.0, 1.0);
        let centered =
            look_at_with_fov_shift(&cam, &target, &Vector3::z(), &intr, &Vector2::new(0.5, 0.5))
                .unwrap();
        let shifted =
            look_at_with_fov_shift(&cam, &target, &Vector3::z(), &intr, &Vector2::new(0.75, 0.5))
                .unwrap();
        let p = project(&target, &intr, &shifted).unwrap();
        assert!((p - Vector2::new(0.75 * w, 0.5 * h)).norm() < 1e-3);

        // the relative rotation is a pure pan about the image vertical axis;
        // exact angle is atan(tan(5 deg) / 2), about 2.4985 degrees
        let rel = shifted.rotation * centered.rotation.transpose();
        let pan = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos().to_degrees();
        // rotation about the camera y axis (image down)
        assert!(rel[(0, 2)] > 0.0);
        assert!(rel[(1, 2)].abs() < 1e-12 && rel[(2, 1)].abs() < 1e-12);
        let exact = (0.5 * 5.0f64.to_radians().tan()).atan().to_degrees();
        assert!((pan - exact).abs() < 1e-6, "pan {pan}");
        assert!((pan - 2.5).abs() < 0.01);
    }

    #[test]
    fn look_at_straight_down_with_z_up_is_degenerate() {
        let intr = simple_intrinsics();
        let r = look_at_with_fov_shift(
            &Vector3::new(0.0, 0.0, 10.0),
            &Vector3::zeros(),
            &Vector3::z(),
            &intr,
            &Vector2::new(0.5, 0.5),
        );
        assert_eq!(r, Err(CameraError::DegenerateUp));
    }

    #[test]
    fn projection_matrix_scale_invariance() {
        let intr = simple_intrinsics();
        let extr = CameraExtrinsics::from_center(
            camera_rotation(EulerAngles::new(0.3, 0.1, -0.05)),
            &Vector3::new(-5.0, 1.0, 2.0),
        );
        let p = Vector3::new(3.0, 1.5, 1.0);
        let direct = project(&p, &intr, &extr).unwrap();
        let m = extr.projection_matrix(&intr) * 7.5;
        let h = m * p.push(1.0);
        assert!((direct - Vector2::new(h.x / h.z, h.y / h.z)).norm() < 1e-9);
    }
}
