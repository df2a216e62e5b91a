//! Objective terms and their analytic gradients.
//!
//! * `e_rep`: robust, confidence-weighted reprojection error, averaged over
//!   the visible detections.
//! * `e_limbs`: squared deviation from the reference limb lengths, summed
//!   over limbs and averaged over frames.
//! * `e_rot`: Frobenius distance between measured rotation deltas and the
//!   deltas of the estimated rotation tracks.
//!
//! Trajectories are stored channel-major (`[channel][frame]`). Pose channels
//! are `joint * 3 + axis`; camera channels are `camera * 3 + k` with `k`
//! indexing (yaw, pitch, roll).

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Matrix3, Vector2, Vector3};
use thiserror::Error;

use crate::camera::{camera_rotation, camera_rotation_partials, EulerAngles, MIN_DEPTH};
use crate::motion_basis::{BasisError, CosineBasis};
use crate::observation::ObservationSet;
use crate::rig::CameraRig;
use crate::rotation_from_background::RotationDeltas;
use crate::skeleton::SkeletonModel;
use crate::trajectory::{PoseTrajectory, RotationTrack};

/// Residual, in pixels, charged for a detection whose 3D point lies behind
/// the camera. It carries no gradient.
pub const BEHIND_CAMERA_RESIDUAL_PX: f64 = 1e4;

/// Limb vectors shorter than this get a zero gradient direction.
const COINCIDENT_JOINTS_M: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EnergyError {
    #[error("weights must be nonnegative and sigma_sq positive")]
    InvalidWeights,
    #[error("observations have {found} {what}, expected {expected}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("parameter vector has length {found}, expected {expected}")]
    ParameterLength { expected: usize, found: usize },
    #[error(transparent)]
    Basis(#[from] BasisError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyWeights {
    pub lambda_rep: f64,
    pub lambda_limbs: f64,
    pub lambda_rot: f64,
    /// Variance of the robust norm, in px^2.
    pub sigma_sq: f64,
}

impl EnergyWeights {
    pub fn calibrated() -> Self {
        Self {
            lambda_rep: 80.0,
            lambda_limbs: 1.0,
            lambda_rot: 0.0,
            sigma_sq: 100.0,
        }
    }

    pub fn uncalibrated() -> Self {
        Self {
            lambda_rep: 500.0,
            lambda_limbs: 1.0,
            lambda_rot: 10_000.0,
            sigma_sq: 100.0,
        }
    }

    pub fn validate(&self) -> Result<(), EnergyError> {
        let ok = self.lambda_rep >= 0.0
            && self.lambda_limbs >= 0.0
            && self.lambda_rot >= 0.0
            && self.sigma_sq > 0.0
            && self.sigma_sq.is_finite();
        ok.then_some(()).ok_or(EnergyError::InvalidWeights)
    }
}

impl Default for EnergyWeights {
    fn default() -> Self {
        Self::calibrated()
    }
}

/// Term values of one objective evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyTerms {
    pub total: f64,
    pub e_rep: f64,
    pub e_limbs: f64,
    pub e_rot: f64,
}

impl EnergyTerms {
    pub fn combine(weights: &EnergyWeights, e_rep: f64, e_limbs: f64, e_rot: f64) -> Self {
        Self {
            total: weights.lambda_rep * e_rep
                + weights.lambda_limbs * e_limbs
                + weights.lambda_rot * e_rot,
            e_rep,
            e_limbs,
            e_rot,
        }
    }
}

/// Term values together with the gradient over the parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBreakdown {
    pub terms: EnergyTerms,
    pub gradient: Vec<f64>,
}

/// Zero-mean normal density with variance `sigma_sq`.
pub fn normal_density(e: f64, sigma_sq: f64) -> f64 {
    (-0.5 * e * e / sigma_sq).exp() / (2.0 * PI * sigma_sq).sqrt()
}

/// Robust norm `g(e) = (n(0) - n(e)) * e` and its derivative.
pub fn robust_norm(e: f64, sigma_sq: f64) -> (f64, f64) {
    let n0 = normal_density(0.0, sigma_sq);
    let ne = normal_density(e, sigma_sq);
    let g = (n0 - ne) * e;
    let dg = (n0 - ne) + ne * e * e / sigma_sq;
    (g, dg)
}

/// Robust distance between a projection and a detection whose residual is
/// scaled by `confidence`.
pub fn robust_distance(
    projected: &Vector2<f64>,
    observed: &Vector2<f64>,
    confidence: f64,
    sigma_sq: f64,
) -> f64 {
    let e = ((projected - observed) * confidence).norm();
    robust_norm(e, sigma_sq).0
}

/// Gradient of [`robust_distance`] with respect to `projected`.
pub fn robust_distance_gradient(
    projected: &Vector2<f64>,
    observed: &Vector2<f64>,
    confidence: f64,
    sigma_sq: f64,
) -> Vector2<f64> {
    let d = projected - observed;
    let dn = d.norm();
    if dn == 0.0 || confidence == 0.0 {
        return Vector2::zeros();
    }
    let (_, dg) = robust_norm(confidence * dn, sigma_sq);
    d * (dg * confidence / dn)
}

/// How a set of scalar trajectories is parametrized.
#[derive(Debug, Clone, PartialEq)]
pub enum TrackParam {
    /// Truncated cosine basis.
    Cosine(CosineBasis),
    /// One free parameter per frame.
    Direct { n_frames: usize },
}

impl TrackParam {
    pub fn cosine(n_frames: usize, n_basis: usize) -> Result<Self, BasisError> {
        Ok(Self::Cosine(CosineBasis::new(n_frames, n_basis)?))
    }

    pub fn direct(n_frames: usize) -> Self {
        Self::Direct { n_frames }
    }

    pub fn n_frames(&self) -> usize {
        match self {
            Self::Cosine(b) => b.n_frames(),
            Self::Direct { n_frames } => *n_frames,
        }
    }

    /// Parameters per scalar channel.
    pub fn per_channel(&self) -> usize {
        match self {
            Self::Cosine(b) => b.n_basis(),
            Self::Direct { n_frames } => *n_frames,
        }
    }

    pub fn decode_into(&self, params: &[f64], out: &mut [f64]) {
        match self {
            Self::Cosine(b) => b.evaluate_into(params, out),
            Self::Direct { .. } => out.copy_from_slice(params),
        }
    }

    pub fn decode(&self, params: &[f64]) -> Vec<f64> {
        let channels = params.len() / self.per_channel().max(1);
        let mut out = vec![0.0; channels * self.n_frames()];
        self.decode_into(params, &mut out);
        out
    }

    /// Overwrites `grad_params` with the chain rule applied to `grad_traj`.
    pub fn backprop_into(&self, grad_traj: &[f64], grad_params: &mut [f64]) {
        match self {
            Self::Cosine(b) => b.backprop_into(grad_traj, grad_params),
            Self::Direct { .. } => grad_params.copy_from_slice(grad_traj),
        }
    }

    /// Least-squares parameters reproducing `traj` (`[channel][frame]`).
    pub fn fit(&self, traj: &[f64]) -> Result<Vec<f64>, BasisError> {
        match self {
            Self::Cosine(b) => Ok(b.fit(traj)?.into_vec()),
            Self::Direct { .. } => Ok(traj.to_vec()),
        }
    }
}

/// Source of the per-frame camera rotations.
#[derive(Debug, Clone, PartialEq)]
pub enum RotationModel<'a> {
    /// Known world-to-camera rotations, one track per camera.
    Known(&'a [RotationTrack]),
    /// Euler-angle tracks that are optimized, optionally tied to measured
    /// deltas.
    Estimated {
        param: TrackParam,
        deltas: Option<&'a RotationDeltas>,
    },
}

/// Reprojection term over decoded positions and rotations.
///
/// `positions` is channel-major with `n_joints * 3` channels, `rotations`
/// is indexed `[camera * n_frames + frame]`. Gradients, when requested, are
/// accumulated (not overwritten) into `grad_positions` and `grad_rotations`.
pub fn e_rep(
    positions: &[f64],
    rotations: &[Matrix3<f64>],
    obs: &ObservationSet,
    rig: &CameraRig,
    sigma_sq: f64,
    mut grad_positions: Option<&mut [f64]>,
    mut grad_rotations: Option<&mut [Matrix3<f64>]>,
) -> f64 {
    let (nf, nc) = (obs.n_frames(), obs.n_cameras());
    let count = obs.visible_count();
    if count == 0 {
        return 0.0;
    }
    let inv_count = 1.0 / count as f64;
    let behind = |conf: f64| robust_norm(conf * BEHIND_CAMERA_RESIDUAL_PX, sigma_sq).0;
    let mut sum = 0.0;
    for f in 0..nf {
        for c in 0..nc {
            let cam = rig.camera(c);
            let k = cam.intrinsics_at(f).k();
            let r = &rotations[c * nf + f];
            let center = cam.position;
            let mut g_r = Matrix3::zeros();
            for (j, det) in obs.view(f, c).iter().enumerate() {
                let Some(det) = det else { continue };
                let p = Vector3::new(
                    positions[(j * 3) * nf + f],
                    positions[(j * 3 + 1) * nf + f],
                    positions[(j * 3 + 2) * nf + f],
                );
                let rel = p - center;
                let pc = r * rel;
                if pc.z <= MIN_DEPTH {
                    sum += behind(det.confidence);
                    continue;
                }
                let h = k * pc;
                let inv_z = 1.0 / h.z;
                let proj = Vector2::new(h.x * inv_z, h.y * inv_z);
                sum += robust_distance(&proj, &det.pixel, det.confidence, sigma_sq);
                if grad_positions.is_none() && grad_rotations.is_none() {
                    continue;
                }
                let gp = robust_distance_gradient(&proj, &det.pixel, det.confidence, sigma_sq)
                    * inv_count;
                if gp == Vector2::zeros() {
                    continue;
                }
                // d(proj)/d(pc): rows (K_row - proj * e_z) / z, with h.z = pc.z
                let g_pc = Vector3::new(
                    gp.x * k[(0, 0)] + gp.y * k[(1, 0)],
                    gp.x * k[(0, 1)] + gp.y * k[(1, 1)],
                    gp.x * k[(0, 2)] + gp.y * k[(1, 2)] - gp.x * proj.x - gp.y * proj.y,
                ) * inv_z;
                if let Some(gpos) = grad_positions.as_deref_mut() {
                    let g_world = r.transpose() * g_pc;
                    for d in 0..3 {
                        gpos[(j * 3 + d) * nf + f] += g_world[d];
                    }
                }
                g_r += g_pc * rel.transpose();
            }
            if let Some(grot) = grad_rotations.as_deref_mut() {
                grot[c * nf + f] += g_r;
            }
        }
    }
    sum * inv_count
}

/// Limb-length term over decoded positions (`[joint * 3 + axis][frame]`).
/// Gradients are accumulated into `grad_positions`.
pub fn e_limbs(
    positions: &[f64],
    n_frames: usize,
    skel: &SkeletonModel,
    mut grad_positions: Option<&mut [f64]>,
) -> f64 {
    if n_frames == 0 {
        return 0.0;
    }
    let nf = n_frames;
    let scale = 1.0 / nf as f64;
    let at = |j: usize, f: usize| {
        Vector3::new(
            positions[(j * 3) * nf + f],
            positions[(j * 3 + 1) * nf + f],
            positions[(j * 3 + 2) * nf + f],
        )
    };
    let mut sum = 0.0;
    for f in 0..nf {
        for limb in skel.limbs() {
            let d = at(limb.a, f) - at(limb.b, f);
            let len = d.norm();
            let res = len - limb.length;
            sum += res * res;
            if let Some(g) = grad_positions.as_deref_mut() {
                if len < COINCIDENT_JOINTS_M {
                    continue;
                }
                let gd = d * (2.0 * res * scale / len);
                for k in 0..3 {
                    g[(limb.a * 3 + k) * nf + f] += gd[k];
                    g[(limb.b * 3 + k) * nf + f] -= gd[k];
                }
            }
        }
    }
    sum * scale
}

/// Rotation-consistency term. `rotations` is indexed
/// `[camera * n_frames + frame]`; invalid deltas are skipped. Gradients are
/// accumulated into `grad_rotations`.
pub const ROT_NORM_EPS: f64 = 1e-4;

pub fn e_rot(
    rotations: &[Matrix3<f64>],
    n_frames: usize,
    deltas: &RotationDeltas,
    mut grad_rotations: Option<&mut [Matrix3<f64>]>,
) -> f64 {
    let nc = deltas.n_cameras();
    if n_frames == 0 || nc == 0 {
        return 0.0;
    }
    let scale = 1.0 / (n_frames * nc) as f64;
    let mut sum = 0.0;
    for (c, entries) in deltas.cameras.iter().enumerate() {
        for (f, entry) in entries.iter().enumerate().take(n_frames.saturating_sub(1)) {
            if !entry.valid {
                continue;
            }
            let r0 = &rotations[c * n_frames + f];
            let r1 = &rotations[c * n_frames + f + 1];
            let m = entry.rotation - r1 * r0.transpose();
            let soft = (m.norm_squared() + ROT_NORM_EPS * ROT_NORM_EPS).sqrt();
            sum += soft - ROT_NORM_EPS;
            if let Some(g) = grad_rotations.as_deref_mut() {
                if soft == 0.0 {
                    continue;
                }
                let u = m * (scale / soft);
                g[c * n_frames + f + 1] -= u * r0;
                g[c * n_frames + f] -= u.transpose() * r1;
            }
        }
    }
    sum * scale
}

/// The full objective over a flat parameter vector `[pose | camera]`.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    obs: &'a ObservationSet,
    rig: &'a CameraRig,
    skel: &'a SkeletonModel,
    weights: EnergyWeights,
    pose: TrackParam,
    rotations: RotationModel<'a>,
}

impl<'a> Objective<'a> {
    pub fn new(
        obs: &'a ObservationSet,
        rig: &'a CameraRig,
        skel: &'a SkeletonModel,
        weights: EnergyWeights,
        pose: TrackParam,
        rotations: RotationModel<'a>,
    ) -> Result<Self, EnergyError> {
        weights.validate()?;
        let nf = obs.n_frames();
        let check = |what, expected, found| {
            if expected == found {
                Ok(())
            } else {
                Err(EnergyError::ShapeMismatch {
                    what,
                    expected,
                    found,
                })
            }
        };
        check("joints", skel.n_joints(), obs.n_joints())?;
        check("cameras", rig.n_cameras(), obs.n_cameras())?;
        check("frames", rig.n_frames(), nf)?;
        check("pose frames", nf, pose.n_frames())?;
        match &rotations {
            RotationModel::Known(tracks) => {
                check("rotation tracks", obs.n_cameras(), tracks.len())?;
                for t in tracks.iter() {
                    check("rotation frames", nf, t.len())?;
                }
            }
            RotationModel::Estimated { param, deltas } => {
                check("camera frames", nf, param.n_frames())?;
                if let Some(d) = deltas {
                    check("delta cameras", obs.n_cameras(), d.n_cameras())?;
                }
            }
        }
        Ok(Self {
            obs,
            rig,
            skel,
            weights,
            pose,
            rotations,
        })
    }

    pub fn weights(&self) -> &EnergyWeights {
        &self.weights
    }

    pub fn set_weights(&mut self, weights: EnergyWeights) -> Result<(), EnergyError> {
        weights.validate()?;
        self.weights = weights;
        Ok(())
    }

    pub fn pose_param(&self) -> &TrackParam {
        &self.pose
    }

    pub fn rotation_model(&self) -> &RotationModel<'a> {
        &self.rotations
    }

    pub fn n_frames(&self) -> usize {
        self.obs.n_frames()
    }

    fn pose_channels(&self) -> usize {
        self.obs.n_joints() * 3
    }

    fn camera_channels(&self) -> usize {
        self.obs.n_cameras() * 3
    }

    pub fn n_pose_params(&self) -> usize {
        self.pose_channels() * self.pose.per_channel()
    }

    pub fn n_camera_params(&self) -> usize {
        match &self.rotations {
            RotationModel::Known(_) => 0,
            RotationModel::Estimated { param, .. } => self.camera_channels() * param.per_channel(),
        }
    }

    pub fn n_params(&self) -> usize {
        self.n_pose_params() + self.n_camera_params()
    }

    fn check_len(&self, x: &[f64]) -> Result<(), EnergyError> {
        if x.len() == self.n_params() {
            Ok(())
        } else {
            Err(EnergyError::ParameterLength {
                expected: self.n_params(),
                found: x.len(),
            })
        }
    }

    /// Joint positions, channel-major.
    pub fn decode_positions(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.pose_channels() * self.n_frames()];
        self.pose.decode_into(&x[..self.n_pose_params()], &mut out);
        out
    }

    pub fn decode_pose(&self, x: &[f64]) -> PoseTrajectory {
        PoseTrajectory::from_channels(self.n_frames(), self.obs.n_joints(), &self.decode_positions(x))
    }

    /// Camera Euler angles, channel-major, when rotations are estimated.
    pub fn decode_angles(&self, x: &[f64]) -> Option<Vec<f64>> {
        match &self.rotations {
            RotationModel::Known(_) => None,
            RotationModel::Estimated { param, .. } => {
                let mut out = vec![0.0; self.camera_channels() * self.n_frames()];
                param.decode_into(&x[self.n_pose_params()..], &mut out);
                Some(out)
            }
        }
    }

    fn angles_at(angles: &[f64], nf: usize, c: usize, f: usize) -> EulerAngles {
        EulerAngles::new(
            angles[(c * 3) * nf + f],
            angles[(c * 3 + 1) * nf + f],
            angles[(c * 3 + 2) * nf + f],
        )
    }

    /// Rotations indexed `[camera * n_frames + frame]`.
    pub fn decode_rotations_flat(&self, x: &[f64]) -> Vec<Matrix3<f64>> {
        let (nf, nc) = (self.n_frames(), self.obs.n_cameras());
        match &self.rotations {
            RotationModel::Known(tracks) => tracks.iter().flat_map(|t| t.iter().copied()).collect(),
            RotationModel::Estimated { .. } => {
                let angles = self.decode_angles(x).expect("estimated rotations");
                (0..nc)
                    .flat_map(|c| (0..nf).map(move |f| (c, f)))
                    .map(|(c, f)| camera_rotation(Self::angles_at(&angles, nf, c, f)))
                    .collect()
            }
        }
    }

    pub fn decode_rotations(&self, x: &[f64]) -> Vec<RotationTrack> {
        let nf = self.n_frames();
        self.decode_rotations_flat(x)
            .chunks(nf.max(1))
            .map(|c| c.to_vec())
            .collect()
    }

    /// Energy terms only.
    pub fn energy(&self, x: &[f64]) -> Result<EnergyTerms, EnergyError> {
        self.check_len(x)?;
        Ok(self.eval(x, None))
    }

    /// Energy terms and gradient.
    pub fn evaluate(&self, x: &[f64]) -> Result<EnergyBreakdown, EnergyError> {
        self.check_len(x)?;
        let mut gradient = vec![0.0; x.len()];
        let terms = self.eval(x, Some(&mut gradient));
        Ok(EnergyBreakdown { terms, gradient })
    }

    /// Energy with the gradient written into `grad`, for use inside an
    /// optimizer loop. `x` and `grad` must have length [`Self::n_params`].
    pub fn eval(&self, x: &[f64], grad: Option<&mut [f64]>) -> EnergyTerms {
        let (nf, nc) = (self.n_frames(), self.obs.n_cameras());
        let w = &self.weights;
        let want_grad = grad.is_some();
        let positions = self.decode_positions(x);
        let rotations = self.decode_rotations_flat(x);
        let estimated = matches!(self.rotations, RotationModel::Estimated { .. });

        let mut g_pos = want_grad.then(|| vec![0.0; positions.len()]);
        let mut g_rot = (want_grad && estimated).then(|| vec![Matrix3::zeros(); rotations.len()]);

        let rep_grads = w.lambda_rep > 0.0;
        let rep = e_rep(
            &positions,
            &rotations,
            self.obs,
            self.rig,
            w.sigma_sq,
            g_pos.as_deref_mut().filter(|_| rep_grads),
            g_rot.as_deref_mut().filter(|_| rep_grads),
        );
        // Scale the accumulated reprojection gradients before adding other terms.
        if let Some(g) = g_pos.as_deref_mut() {
            g.iter_mut().for_each(|v| *v *= w.lambda_rep);
        }
        if let Some(g) = g_rot.as_deref_mut() {
            g.iter_mut().for_each(|v| *v *= w.lambda_rep);
        }

        let limbs = if w.lambda_limbs > 0.0 {
            let mut tmp = want_grad.then(|| vec![0.0; positions.len()]);
            let v = e_limbs(&positions, nf, self.skel, tmp.as_deref_mut());
            if let (Some(g), Some(t)) = (g_pos.as_deref_mut(), tmp) {
                g.iter_mut().zip(t).for_each(|(a, b)| *a += w.lambda_limbs * b);
            }
            v
        } else {
            e_limbs(&positions, nf, self.skel, None)
        };

        let rot = match &self.rotations {
            RotationModel::Estimated {
                deltas: Some(deltas),
                ..
            } => {
                if w.lambda_rot > 0.0 {
                    let mut tmp = want_grad.then(|| vec![Matrix3::zeros(); rotations.len()]);
                    let v = e_rot(&rotations, nf, deltas, tmp.as_deref_mut());
                    if let (Some(g), Some(t)) = (g_rot.as_deref_mut(), tmp) {
                        g.iter_mut().zip(t).for_each(|(a, b)| *a += b * w.lambda_rot);
                    }
                    v
                } else {
                    e_rot(&rotations, nf, deltas, None)
                }
            }
            _ => 0.0,
        };

        if let Some(grad) = grad {
            let n_pose = self.n_pose_params();
            let (gp, gc) = grad.split_at_mut(n_pose);
            self.pose
                .backprop_into(g_pos.as_deref().expect("gradient buffer"), gp);
            if let RotationModel::Estimated { param, .. } = &self.rotations {
                let angles = self.decode_angles(x).expect("estimated rotations");
                let g_r = g_rot.as_deref().expect("gradient buffer");
                let mut g_angles = vec![0.0; angles.len()];
                for c in 0..nc {
                    for f in 0..nf {
                        let gr = &g_r[c * nf + f];
                        if *gr == Matrix3::zeros() {
                            continue;
                        }
                        let partials = camera_rotation_partials(Self::angles_at(&angles, nf, c, f));
                        for (k, dr) in partials.iter().enumerate() {
                            g_angles[(c * 3 + k) * nf + f] = gr.component_mul(dr).sum();
                        }
                    }
                }
                param.backprop_into(&g_angles, gc);
            }
        }
        EnergyTerms::combine(w, rep, limbs, rot)
    }
}

/// Weighted total of all terms at the given parameters.
pub fn total_energy(objective: &Objective<'_>, x: &[f64]) -> Result<EnergyBreakdown, EnergyError> {
    objective.evaluate(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn robust_norm_oracle_at_ten_pixels() {
        let sigma_sq: f64 = 100.0;
        let n0 = 1.0 / (2.0 * PI * sigma_sq).sqrt();
        let n10 = n0 * (-0.5f64).exp();
        let (g, dg) = robust_norm(10.0, sigma_sq);
        assert!((g - (n0 - n10) * 10.0).abs() < 1e-15);
        let h = 1e-5;
        let fd = (robust_norm(10.0 + h, sigma_sq).0 - robust_norm(10.0 - h, sigma_sq).0) / (2.0 * h);
        assert!((dg - fd).abs() / dg.abs() < 1e-6);
    }

    #[test]
    fn robust_distance_zero_cases() {
        let p = Vector2::new(3.0, 4.0);
        assert_eq!(robust_distance(&p, &p, 1.0, 100.0), 0.0);
        assert_eq!(robust_distance(&p, &Vector2::zeros(), 0.0, 100.0), 0.0);
        assert_eq!(robust_distance_gradient(&p, &p, 1.0, 100.0), Vector2::zeros());
    }

    #[test]
    fn robust_distance_gradient_matches_differences() {
        let (p, o) = (Vector2::new(13.0, -4.0), Vector2::new(1.0, 2.5));
        let g = robust_distance_gradient(&p, &o, 0.7, 100.0);
        let h = 1e-6;
        for k in 0..2 {
            let mut a = p;
            let mut b = p;
            a[k] += h;
            b[k] -= h;
            let fd = (robust_distance(&a, &o, 0.7, 100.0) - robust_distance(&b, &o, 0.7, 100.0)) / (2.0 * h);
            assert!((g[k] - fd).abs() < 1e-9);
        }
    }

    #[test]
    fn direct_param_is_identity() {
        let p = TrackParam::direct(4);
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        assert_eq!(p.decode(&x), x.to_vec());
        assert_eq!(p.fit(&x).unwrap(), x.to_vec());
        assert_eq!(p.per_channel(), 4);
    }

    #[test]
    fn weighted_total() {
        let t = EnergyTerms::combine(&EnergyWeights::calibrated(), 0.5, 0.2, 3.0);
        assert!((t.total - 40.2).abs() < 1e-12);
        let zero = EnergyWeights {
            lambda_rep: 0.0,
            lambda_limbs: 0.0,
            lambda_rot: 0.0,
            sigma_sq: 1.0,
        };
        assert_eq!(EnergyTerms::combine(&zero, 0.5, 0.2, 3.0).total, 0.0);
    }
}
