//! Reconstruction drivers: calibrated, uncalibrated (with look-at
//! bootstrapping) and the per-frame baseline without a cosine basis.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2, Matrix3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::camera::{camera_angles, look_at_with_fov_shift};
use crate::energy::{EnergyError, EnergyTerms, EnergyWeights, Objective, RotationModel, TrackParam};
use crate::lbfgs::{Lbfgs, LbfgsConfig, OuterStatus};
use crate::motion_basis::{BasisError, DctCoefficients};
use crate::observation::ObservationSet;
use crate::rig::{CameraRig, RigError};
use crate::rotation_from_background::RotationDeltas;
use crate::skeleton::SkeletonModel;
use crate::trajectory::{PoseTrajectory, RotationTrack};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("energy is not finite at the initial guess")]
    NonFiniteInitialEnergy,
    #[error("calibrated mode needs a rotation track for every camera")]
    MissingRotations,
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Rig(#[from] RigError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMode {
    Calibrated,
    Uncalibrated,
    BaselineDirect,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Trial step of the first quasi-Newton update (and after resets).
    pub step_length: f64,
    pub outer_iters: usize,
    pub max_inner_iters: usize,
    pub history_size: usize,
    pub mode: SolverMode,
    /// Half-width of the uniform initial offset of each joint, in meters.
    pub init_spread_m: f64,
    pub bootstrap_iters: usize,
    pub seed: u64,
    /// Cosine coefficients per pose channel.
    pub pose_basis: usize,
    /// Cosine coefficients per camera-angle channel.
    pub camera_basis: usize,
    /// Relative energy decrease regarded as no progress.
    pub tolerance: f64,
    /// Consecutive outer iterations without progress before stopping.
    pub patience: usize,
}

impl SolverConfig {
    pub fn calibrated() -> Self {
        Self {
            step_length: 0.05,
            outer_iters: 100,
            max_inner_iters: 20,
            history_size: 10,
            mode: SolverMode::Calibrated,
            init_spread_m: 10.0,
            bootstrap_iters: 25,
            seed: 0,
            pose_basis: 25,
            camera_basis: 11,
            tolerance: 1e-9,
            patience: 10,
        }
    }

    pub fn uncalibrated() -> Self {
        Self {
            outer_iters: 1500,
            mode: SolverMode::Uncalibrated,
            init_spread_m: 1.0,
            pose_basis: 11,
            ..Self::calibrated()
        }
    }

    pub fn baseline_direct() -> Self {
        Self {
            mode: SolverMode::BaselineDirect,
            ..Self::calibrated()
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: &str| Err(SolveError::InvalidConfig(String::from(m)));
        if !(self.step_length > 0.0) {
            return bad("step_length must be positive");
        }
        if self.outer_iters == 0 || self.max_inner_iters == 0 || self.history_size == 0 {
            return bad("iteration counts and history size must be positive");
        }
        if self.pose_basis == 0 || self.camera_basis == 0 {
            return bad("basis sizes must be positive");
        }
        if !(self.init_spread_m >= 0.0) {
            return bad("init_spread_m must be nonnegative");
        }
        Ok(())
    }

    fn lbfgs(&self) -> LbfgsConfig {
        LbfgsConfig {
            history_size: self.history_size,
            max_inner_iters: self.max_inner_iters,
            initial_step: self.step_length,
            ..LbfgsConfig::default()
        }
    }

    fn pose_param(&self, n_frames: usize, direct: bool) -> Result<TrackParam, SolveError> {
        Ok(if direct {
            TrackParam::direct(n_frames)
        } else {
            TrackParam::cosine(n_frames, self.pose_basis.min(n_frames))?
        })
    }

    fn camera_param(&self, n_frames: usize, direct: bool) -> Result<TrackParam, SolveError> {
        Ok(if direct {
            TrackParam::direct(n_frames)
        } else {
            TrackParam::cosine(n_frames, self.camera_basis.min(n_frames))?
        })
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::calibrated()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Relative energy decrease stayed below tolerance for `patience`
    /// consecutive outer iterations, or the gradient vanished.
    Converged,
    /// No step decreased the energy any further.
    Stalled,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveWarning {
    /// More than half of a camera's rotation deltas are invalid.
    SparseDeltas { camera: usize, invalid_fraction: f64 },
    /// No valid delta at all: camera rotations are unconstrained.
    NoValidDeltas,
    /// No known rotations and no deltas: free optimization of orientations.
    FreeRotations,
    Other(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    /// Pose coefficients, absent for per-frame parametrizations.
    pub pi: Option<DctCoefficients>,
    /// Camera-angle coefficients when rotations were estimated with a basis.
    pub gamma: Option<DctCoefficients>,
    /// Raw optimizer parameters `[pose | camera]`.
    pub params: Vec<f64>,
    pub trajectory: PoseTrajectory,
    pub rotation_tracks: Vec<RotationTrack>,
    /// Terms at the initial guess followed by one entry per outer iteration.
    pub energy_history: Vec<EnergyTerms>,
    pub termination: Termination,
    pub converged: bool,
    pub outer_iterations: usize,
    pub warnings: Vec<SolveWarning>,
}

/// Runs outer iterations until convergence or budget exhaustion.
fn optimize(
    objective: &Objective<'_>,
    x: &mut [f64],
    cfg: &SolverConfig,
    outer_iters: usize,
    history: &mut Vec<EnergyTerms>,
) -> Result<(Termination, usize), SolveError> {
    let initial = objective.energy(x)?;
    if !initial.total.is_finite() {
        return Err(SolveError::NonFiniteInitialEnergy);
    }
    history.push(initial);
    let mut opt = Lbfgs::new(cfg.lbfgs());
    let mut prev = initial.total;
    let mut quiet = 0;
    for it in 0..outer_iters {
        let report = opt.outer(x, |x, g| objective.eval(x, Some(g)).total);
        history.push(objective.energy(x)?);
        match report.status {
            OuterStatus::Stationary => return Ok((Termination::Converged, it + 1)),
            OuterStatus::LineSearchFailed => return Ok((Termination::Stalled, it + 1)),
            OuterStatus::Budget => {}
        }
        // relative decrease, measured in absolute terms once the energy is below one
        let rel = (prev - report.value) / prev.abs().max(1.0);
        prev = report.value;
        if rel < cfg.tolerance {
            quiet += 1;
            if quiet >= cfg.patience {
                return Ok((Termination::Converged, it + 1));
            }
        } else {
            quiet = 0;
        }
    }
    Ok((Termination::BudgetExhausted, outer_iters))
}

/// Channel-major initial trajectory: every joint sits at the camera
/// centroid plus its own constant uniform offset.
fn initial_positions(
    rig: &CameraRig,
    centers: Option<&[Vector3<f64>]>,
    n_joints: usize,
    n_frames: usize,
    spread: f64,
    seed: u64,
) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centroid = rig.centroid();
    let mut out = vec![0.0; n_joints * 3 * n_frames];
    for j in 0..n_joints {
        for d in 0..3 {
            let offset = if spread > 0.0 {
                rng.random_range(-spread..=spread)
            } else {
                0.0
            };
            let channel = &mut out[(j * 3 + d) * n_frames..(j * 3 + d + 1) * n_frames];
            match centers {
                Some(c) => channel.iter_mut().zip(c).for_each(|(v, p)| *v = p[d] + offset),
                None => channel.fill(centroid[d] + offset),
            }
        }
    }
    out
}

/// Joints a camera subset must share before a frame is factorized.
const MIN_SHARED_JOINTS: usize = 6;

fn visible(obs: &ObservationSet, f: usize, c: usize) -> usize {
    obs.view(f, c).iter().filter(|d| d.is_some()).count()
}

/// Range from each camera to the athlete in frame `f`, by affine
/// factorization of the centered detections across cameras. The metric
/// scale comes from the limb lengths.
fn frame_ranges(obs: &ObservationSet, rig: &CameraRig, skel: &SkeletonModel, f: usize) -> Vec<(usize, f64)> {
    let mut cams: Vec<usize> = (0..obs.n_cameras())
        .filter(|&c| visible(obs, f, c) >= MIN_SHARED_JOINTS)
        .collect();
    let shared = loop {
        if cams.len() < 3 {
            return Vec::new();
        }
        let shared: Vec<usize> = (0..obs.n_joints())
            .filter(|&j| cams.iter().all(|&c| obs.view(f, c)[j].is_some()))
            .collect();
        if shared.len() >= MIN_SHARED_JOINTS {
            break shared;
        }
        let worst = (0..cams.len()).min_by_key(|&i| visible(obs, f, cams[i])).unwrap_or(0);
        cams.remove(worst);
    };
    let (nc, ns) = (cams.len(), shared.len());
    let mut w = DMatrix::zeros(2 * nc, ns);
    for (i, &c) in cams.iter().enumerate() {
        let view = obs.view(f, c);
        let px = |j: usize| view[j].as_ref().map_or(Vector2::zeros(), |d| d.pixel);
        let mean = shared.iter().map(|&j| px(j)).sum::<Vector2<f64>>() / ns as f64;
        for (k, &j) in shared.iter().enumerate() {
            let p = px(j) - mean;
            w[(2 * i, k)] = p.x;
            w[(2 * i + 1, k)] = p.y;
        }
    }
    let svd = w.svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Vec::new();
    };
    let root = Matrix3::from_diagonal(&svd.singular_values.fixed_rows::<3>(0).map(|v| v.sqrt()));
    let m = u.columns(0, 3) * root;
    let shape = root * v_t.rows(0, 3);

    // metric upgrade: each camera's two rows must be orthogonal and of equal length
    let phi = |a: &[f64; 3], b: &[f64; 3]| {
        [
            a[0] * b[0],
            a[0] * b[1] + a[1] * b[0],
            a[0] * b[2] + a[2] * b[0],
            a[1] * b[1],
            a[1] * b[2] + a[2] * b[1],
            a[2] * b[2],
        ]
    };
    let mut g = DMatrix::zeros(2 * nc, 6);
    for i in 0..nc {
        let a = [m[(2 * i, 0)], m[(2 * i, 1)], m[(2 * i, 2)]];
        let b = [m[(2 * i + 1, 0)], m[(2 * i + 1, 1)], m[(2 * i + 1, 2)]];
        let (aa, bb, ab) = (phi(&a, &a), phi(&b, &b), phi(&a, &b));
        for k in 0..6 {
            g[(2 * i, k)] = aa[k] - bb[k];
            g[(2 * i + 1, k)] = ab[k];
        }
    }
    let Some(g_vt) = g.svd(false, true).v_t else {
        return Vec::new();
    };
    let q = g_vt.row(g_vt.nrows() - 1);
    let mut qm = Matrix3::new(q[0], q[1], q[2], q[1], q[3], q[4], q[2], q[4], q[5]);
    if qm.trace() < 0.0 {
        qm = -qm;
    }
    let eig = qm.symmetric_eigen();
    let top = eig.eigenvalues.max();
    if !(top > 0.0) {
        return Vec::new();
    }
    let ev = eig.eigenvalues.map(|v| v.max(1e-12 * top).sqrt());
    let upgrade = eig.eigenvectors * Matrix3::from_diagonal(&ev);
    let m = m * upgrade;
    let shape = Matrix3::from_diagonal(&ev.map(|v| 1.0 / v)) * eig.eigenvectors.transpose() * shape;

    let (mut true_len, mut est_len) = (0.0, 0.0);
    for limb in skel.limbs() {
        if let (Some(ia), Some(ib)) = (
            shared.iter().position(|&j| j == limb.a),
            shared.iter().position(|&j| j == limb.b),
        ) {
            true_len += limb.length;
            est_len += (shape.column(ia) - shape.column(ib)).norm();
        }
    }
    if !(true_len > 0.0 && est_len > 0.0) {
        return Vec::new();
    }
    let meters = true_len / est_len;
    cams.iter()
        .enumerate()
        .filter_map(|(i, &c)| {
            let rows = 0.5 * (m.row(2 * i).norm() + m.row(2 * i + 1).norm());
            let (fx, fy) = rig.camera(c).intrinsics_at(f).focal();
            (rows > 0.0).then(|| (c, 0.5 * (fx + fy) * meters / rows))
        })
        .collect()
}

/// Rough athlete position per frame for cameras with unknown orientation,
/// by trilateration from the ranges of [`frame_ranges`]. Positions are
/// solved in the horizontal plane at the mean camera height. Returns `None`
/// when no frame is seen by three cameras.
pub fn range_centers(obs: &ObservationSet, rig: &CameraRig, skel: &SkeletonModel) -> Option<Vec<Vector3<f64>>> {
    let nf = obs.n_frames();
    let centroid = rig.centroid();
    let ranges: Vec<Vec<(Vector3<f64>, f64)>> = (0..nf)
        .map(|f| {
            frame_ranges(obs, rig, skel, f)
                .into_iter()
                .map(|(c, r)| (rig.camera(c).position, r))
                .collect()
        })
        .collect();
    let usable: Vec<bool> = ranges.iter().map(|r| r.len() >= 3).collect();
    if !usable.iter().any(|&u| u) {
        return None;
    }
    let mut pos: Vec<Vector2<f64>> = vec![centroid.xy(); nf];
    for f in (0..nf).filter(|&f| usable[f]) {
        let mut p = centroid.xy();
        for _ in 0..50 {
            let (mut jtj, mut jtr) = (Matrix2::<f64>::identity() * 1e-6, Vector2::zeros());
            for (cpos, range) in &ranges[f] {
                let dv = Vector3::new(p.x - cpos.x, p.y - cpos.y, centroid.z - cpos.z);
                let rho = dv.norm().max(1e-9);
                let jac = Vector2::new(dv.x, dv.y) / rho;
                jtj += jac * jac.transpose();
                jtr += jac * (rho - range);
            }
            let Some(step) = jtj.lu().solve(&jtr) else { break };
            p -= step;
            if step.norm() < 1e-9 {
                break;
            }
        }
        pos[f] = p;
    }
    let valid: Vec<usize> = (0..nf).filter(|&f| usable[f]).collect();
    let filled = (0..nf)
        .map(|f| {
            let p = match valid.binary_search(&f) {
                Ok(_) => pos[f],
                Err(i) if i == 0 => pos[valid[0]],
                Err(i) if i == valid.len() => pos[valid[i - 1]],
                Err(i) => {
                    let (a, b) = (valid[i - 1], valid[i]);
                    let t = (f - a) as f64 / (b - a) as f64;
                    pos[a] * (1.0 - t) + pos[b] * t
                }
            };
            Vector3::new(p.x, p.y, centroid.z)
        })
        .collect();
    Some(filled)
}

fn coefficients(param: &TrackParam, channels: usize, values: &[f64]) -> Option<DctCoefficients> {
    match param {
        TrackParam::Cosine(b) => {
            DctCoefficients::from_vec(channels, b.n_basis(), b.n_frames(), values.to_vec()).ok()
        }
        TrackParam::Direct { .. } => None,
    }
}

fn check_shapes(obs: &ObservationSet, rig: &CameraRig, skel: &SkeletonModel) -> Result<(), SolveError> {
    if obs.n_joints() != skel.n_joints()
        || obs.n_cameras() != rig.n_cameras()
        || obs.n_frames() != rig.n_frames()
    {
        return Err(SolveError::Energy(EnergyError::ShapeMismatch {
            what: "observation dimensions",
            expected: rig.n_cameras(),
            found: obs.n_cameras(),
        }));
    }
    Ok(())
}

fn solve_known(
    obs: &ObservationSet,
    rig: &CameraRig,
    skel: &SkeletonModel,
    weights: &EnergyWeights,
    cfg: &SolverConfig,
    direct: bool,
) -> Result<SolveResult, SolveError> {
    cfg.validate()?;
    check_shapes(obs, rig, skel)?;
    let tracks: Vec<RotationTrack> = rig
        .rotation_tracks()
        .map_err(|_| SolveError::MissingRotations)?
        .into_iter()
        .cloned()
        .collect();
    let nf = obs.n_frames();
    let pose = cfg.pose_param(nf, direct)?;
    let objective = Objective::new(obs, rig, skel, *weights, pose.clone(), RotationModel::Known(&tracks))?;
    let init = initial_positions(rig, None, skel.n_joints(), nf, cfg.init_spread_m, cfg.seed);
    let mut x = pose.fit(&init)?;
    let mut history = Vec::new();
    let (termination, outer_iterations) = optimize(&objective, &mut x, cfg, cfg.outer_iters, &mut history)?;
    Ok(SolveResult {
        pi: coefficients(&pose, skel.n_joints() * 3, &x),
        gamma: None,
        trajectory: objective.decode_pose(&x),
        rotation_tracks: tracks,
        params: x,
        energy_history: history,
        converged: termination != Termination::BudgetExhausted,
        termination,
        outer_iterations,
        warnings: Vec::new(),
    })
}

/// Pose reconstruction with known camera rotations.
pub fn solve_calibrated(
    obs: &ObservationSet,
    rig: &CameraRig,
    skel: &SkeletonModel,
    weights: &EnergyWeights,
    cfg: &SolverConfig,
) -> Result<SolveResult, SolveError> {
    solve_known(obs, rig, skel, weights, cfg, false)
}

/// Starting point for the uncalibrated solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Bootstrap {
    /// Pose parameters in the solver's pose parametrization.
    pub pose_params: Vec<f64>,
    /// Camera-angle parameters in the solver's camera parametrization.
    pub camera_params: Vec<f64>,
    /// Look-at rotations of the last bootstrap iteration.
    pub rotation_tracks: Vec<RotationTrack>,
    pub energy_history: Vec<EnergyTerms>,
}

/// Aims every camera at the mean of `positions` (channel-major), shifted so
/// that it lands where the athlete was observed.
fn aim_cameras(
    obs: &ObservationSet,
    rig: &CameraRig,
    positions: &[f64],
    n_joints: usize,
    previous: Option<&[RotationTrack]>,
) -> Vec<RotationTrack> {
    let nf = obs.n_frames();
    (0..rig.n_cameras())
        .map(|c| {
            let cam = rig.camera(c);
            (0..nf)
                .map(|f| {
                    let mut target = Vector3::zeros();
                    for j in 0..n_joints {
                        for d in 0..3 {
                            target[d] += positions[(j * 3 + d) * nf + f];
                        }
                    }
                    target /= n_joints as f64;
                    let intr = cam.intrinsics_at(f);
                    let subject = obs
                        .subject_centroid(f, c)
                        .map(|p| Vector2::new(p.x / intr.width(), p.y / intr.height()))
                        .unwrap_or(Vector2::new(0.5, 0.5));
                    match look_at_with_fov_shift(&cam.position, &target, &Vector3::z(), intr, &subject) {
                        Ok(e) => e.rotation,
                        Err(_) => previous.map_or(nalgebra::Matrix3::identity(), |p| p[c][f]),
                    }
                })
                .collect()
        })
        .collect()
}

/// Camera angles of rotation tracks, channel-major, unwrapped over time.
pub fn unwrapped_angles(tracks: &[RotationTrack]) -> Vec<f64> {
    let nf = tracks.first().map_or(0, |t| t.len());
    let mut out = vec![0.0; tracks.len() * 3 * nf];
    for (c, track) in tracks.iter().enumerate() {
        let mut prev = [0.0f64; 3];
        for (f, r) in track.iter().enumerate() {
            let a = camera_angles(r).angles.to_array();
            for k in 0..3 {
                let mut v = a[k];
                if f > 0 {
                    v -= 2.0 * PI * ((v - prev[k]) / (2.0 * PI)).round();
                }
                out[(c * 3 + k) * nf + f] = v;
                prev[k] = v;
            }
        }
    }
    out
}

fn bootstrap_with(
    obs: &ObservationSet,
    rig: &CameraRig,
    skel: &SkeletonModel,
    weights: &EnergyWeights,
    cfg: &SolverConfig,
    direct: bool,
    warm: Option<&[f64]>,
) -> Result<Bootstrap, SolveError> {
    cfg.validate()?;
    check_shapes(obs, rig, skel)?;
    let nf = obs.n_frames();
    let nj = skel.n_joints();
    let pose = cfg.pose_param(nf, direct)?;
    let mut x = match warm {
        Some(p) => pose.fit(p)?,
        None => {
            let centers = range_centers(obs, rig, skel);
            pose.fit(&initial_positions(rig, centers.as_deref(), nj, nf, cfg.init_spread_m, cfg.seed))?
        }
    };
    let mut positions = pose.decode(&x);
    let mut tracks = aim_cameras(obs, rig, &positions, nj, None);
    let mut history = Vec::new();
    // one quasi-Newton update per re-aim
    let mut opt = Lbfgs::new(LbfgsConfig {
        max_inner_iters: 1,
        ..cfg.lbfgs()
    });
    for _ in 0..cfg.bootstrap_iters {
        let objective = Objective::new(obs, rig, skel, *weights, pose.clone(), RotationModel::Known(&tracks))?;
        if history.is_empty() {
            let e = objective.energy(&x)?;
            if !e.total.is_finite() {
                return Err(SolveError::NonFiniteInitialEnergy);
            }
            history.push(e);
        }
        opt.invalidate();
        opt.outer(&mut x, |x, g| objective.eval(x, Some(g)).total);
        history.push(objective.energy(&x)?);
        positions = pose.decode(&x);
        tracks = aim_cameras(obs, rig, &positions, nj, Some(&tracks));
    }
    let camera = cfg.camera_param(nf, direct)?;
    let camera_params = camera.fit(&unwrapped_angles(&tracks))?;
    Ok(Bootstrap {
        pose_params: x,
        camera_params,
        rotation_tracks: tracks,
        energy_history: history,
    })
}

/// Alternates pose updates with re-aiming the cameras at the current pose.
pub fn bootstrap_uncalibrated(
    obs: &ObservationSet,
    rig: &CameraRig,
    skel: &SkeletonModel,
    weights: &EnergyWeights,
    cfg: &SolverConfig,
) -> Result<Bootstrap, SolveError> {
    bootstrap_with(obs, rig, skel, weights, cfg, false, None)
}

fn delta_warnings(deltas: Option<&RotationDeltas>) -> Vec<SolveWarning> {
    let Some(deltas) = deltas else {
        return vec![SolveWarning::FreeRotations];
    };
    let mut out: Vec<SolveWarning> = (0..deltas.n_cameras())
        .filter_map(|c| {
            let frac = deltas.invalid_fraction(c);
            (frac > 0.5).then_some(SolveWarning::SparseDeltas {
                camera: c,
                invalid_fraction: frac,
            })
        })
        .collect();
    if deltas.valid_count() == 0 {
        out.push(SolveWarning::NoValidDeltas);
    }
    out
}

fn solve_estimated(
    obs: &ObservationSet,
    rig: &CameraRig,
    skel: &SkeletonModel,
    deltas: Option<&RotationDeltas>,
    weights: &EnergyWeights,
    cfg: &SolverConfig,
    direct: bool,
    warm: Option<&[f64]>,
) -> Result<SolveResult, SolveError> {
    let boot = bootstrap_with(obs, rig, skel, weights, cfg, direct, warm)?;
    let nf = obs.n_frames();
    let pose = cfg.pose_param(nf, direct)?;
    let camera = cfg.camera_param(nf, direct)?;
    if let Some(d) = deltas {
        if d.n_cameras() != rig.n_cameras() {
            return Err(SolveError::Energy(EnergyError::ShapeMismatch {
                what: "delta cameras",
                expected: rig.n_cameras(),
                found: d.n_cameras(),
            }));
        }
    }
    let objective = Objective::new(
        obs,
        rig,
        skel,
        *weights,
        pose.clone(),
        RotationModel::Estimated {
            param: camera.clone(),
            deltas,
        },
    )?;
    let mut x = boot.pose_params.clone();
    x.extend_from_slice(&boot.camera_params);
    let mut history = Vec::new();
    let (termination, outer_iterations) = optimize(&objective, &mut x, cfg, cfg.outer_iters, &mut history)?;
    let n_pose = objective.n_pose_params();
    Ok(SolveResult {
        pi: coefficients(&pose, skel.n_joints() * 3, &x[..n_pose]),
        gamma: coefficients(&camera, rig.n_cameras() * 3, &x[n_pose..]),
        trajectory: objective.decode_pose(&x),
        rotation_tracks: objective.decode_rotations(&x),
        params: x,
        energy_history: history,
        converged: termination != Termination::BudgetExhausted,
        termination,
        outer_iterations,
        warnings: delta_warnings(deltas),
    })
}

/// Joint estimation of the pose and the camera rotations. Without deltas
/// the rotations are optimized freely.
pub fn solve_uncalibrated(
    obs: &ObservationSet,
    rig: &CameraRig,
    skel: &SkeletonModel,
    deltas: Option<&RotationDeltas>,
    weights: &EnergyWeights,
    cfg: &SolverConfig,
) -> Result<SolveResult, SolveError> {
    solve_estimated(obs, rig, skel, deltas, weights, cfg, false, None)
}

/// [`solve_uncalibrated`] starting from channel-major joint positions
/// instead of the range-based initialization.
pub fn solve_uncalibrated_from(
    obs: &ObservationSet,
    rig: &CameraRig,
    skel: &SkeletonModel,
    deltas: Option<&RotationDeltas>,
    weights: &EnergyWeights,
    cfg: &SolverConfig,
    positions: &[f64],
) -> Result<SolveResult, SolveError> {
    solve_estimated(obs, rig, skel, deltas, weights, cfg, false, Some(positions))
}

/// Same pipelines with one free parameter per frame instead of cosine
/// coefficients. Known rotations in `rig` select the calibrated variant.
pub fn solve_baseline_direct(
    obs: &ObservationSet,
    rig: &CameraRig,
    skel: &SkeletonModel,
    deltas: Option<&RotationDeltas>,
    weights: &EnergyWeights,
    cfg: &SolverConfig,
) -> Result<SolveResult, SolveError> {
    if rig.has_rotations() {
        solve_known(obs, rig, skel, weights, cfg, true)
    } else {
        solve_estimated(obs, rig, skel, deltas, weights, cfg, true, None)
    }
}

/// Dispatches on `cfg.mode`.
pub fn solve(
    obs: &ObservationSet,
    rig: &CameraRig,
    skel: &SkeletonModel,
    deltas: Option<&RotationDeltas>,
    weights: &EnergyWeights,
    cfg: &SolverConfig,
) -> Result<SolveResult, SolveError> {
    match cfg.mode {
        SolverMode::Calibrated => solve_calibrated(obs, rig, skel, weights, cfg),
        SolverMode::Uncalibrated => solve_uncalibrated(obs, rig, skel, deltas, weights, cfg),
        SolverMode::BaselineDirect => solve_baseline_direct(obs, rig, skel, deltas, weights, cfg),
    }
}

impl core::fmt::Display for SolveWarning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::SparseDeltas {
                camera,
                invalid_fraction,
            } => write!(
                f,
                "camera {camera}: {:.0}% of rotation deltas are invalid",
                100.0 * invalid_fraction
            ),
            Self::NoValidDeltas => f.write_str("no valid rotation deltas; rotations are unconstrained"),
            Self::FreeRotations => f.write_str("no rotation deltas given; rotations are optimized freely"),
            Self::Other(s) => f.write_str(s),
        }
    }
}
