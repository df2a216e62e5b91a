//! Evaluation metrics: PCK, MPJPE variants, center of mass, speed and the
//! skiing-specific joint and lean angles.
//!
//! Angles are reported in degrees, distances in meters, speeds in m/s.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{SVector, Vector3};
use thiserror::Error;

use crate::signal::gaussian_smooth;
use crate::skeleton::SkeletonModel;
use crate::trajectory::PoseTrajectory;

pub const DEFAULT_FPS: f64 = 50.0;
/// Temporal smoothing applied to predicted CoM tracks before speeds are
/// compared, in frames.
pub const SPEED_SMOOTHING_SIGMA: f64 = 1.5;

const DEGENERATE_LENGTH: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("trajectories differ in shape ({0})")]
    ShapeMismatch(&'static str),
    #[error("joint `{0}` is not part of the skeleton")]
    MissingJoint(&'static str),
    #[error("angle is undefined: a segment has zero length")]
    UndefinedAngle,
    #[error("local ski frame is degenerate")]
    DegenerateFrame,
    #[error("weighted joint {0} is missing and no mask was given")]
    MissingWeightedJoint(usize),
    #[error("all weighted segments are masked out")]
    EmptyMass,
    #[error("need at least two frames")]
    TooShort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Meters,
    MetersPerSecond,
    Degrees,
    Percent,
}

impl Unit {
    pub fn symbol(self) -> &'static str {
        match self {
            Self::Meters => "m",
            Self::MetersPerSecond => "m/s",
            Self::Degrees => "deg",
            Self::Percent => "%",
        }
    }
}

/// Mean and population standard deviation of a per-frame series.
/// Non-finite entries (skipped frames) are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub mean: f64,
    pub std: f64,
    pub series: Vec<f64>,
    pub unit: Unit,
}

impl MetricReport {
    pub fn from_series(series: Vec<f64>, unit: Unit) -> Self {
        let finite: Vec<f64> = series.iter().copied().filter(|v| v.is_finite()).collect();
        let n = finite.len() as f64;
        let (mean, std) = if finite.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            let mean = finite.iter().sum::<f64>() / n;
            let var = finite.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            (mean, var.sqrt())
        };
        Self {
            mean,
            std,
            series,
            unit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Right,
    Left,
}

impl Side {
    fn suffix(self) -> &'static str {
        match self {
            Self::Right => "_r",
            Self::Left => "_l",
        }
    }

    pub fn other(self) -> Self {
        match self {
            Self::Right => Self::Left,
            Self::Left => Self::Right,
        }
    }
}

/// Result of a PCK evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PckResult {
    pub percentage: f64,
    /// Joints that entered the statistic.
    pub counted: usize,
    /// Frames skipped because the head-neck distance was zero or missing.
    pub skipped_frames: usize,
}

/// Percentage of predicted joints within `multiplier` times the
/// ground-truth head-neck distance. Each entry of `pred` and `gt` is one
/// pose, 2D or 3D; missing ground-truth joints are not counted, missing
/// predictions count as misses.
pub fn pck<const D: usize>(
    pred: &[Vec<Option<SVector<f64, D>>>],
    gt: &[Vec<Option<SVector<f64, D>>>],
    head: usize,
    neck: usize,
    multiplier: f64,
    joints: Option<&[usize]>,
) -> Result<PckResult, MetricsError> {
    if pred.len() != gt.len() {
        return Err(MetricsError::ShapeMismatch("frame count"));
    }
    let (mut hits, mut counted, mut skipped) = (0usize, 0usize, 0usize);
    for (p, g) in pred.iter().zip(gt) {
        if p.len() != g.len() {
            return Err(MetricsError::ShapeMismatch("joint count"));
        }
        let radius = match (g.get(head).copied().flatten(), g.get(neck).copied().flatten()) {
            (Some(h), Some(n)) if (h - n).norm() > 0.0 => multiplier * (h - n).norm(),
            _ => {
                skipped += 1;
                continue;
            }
        };
        let all: Vec<usize> = (0..g.len()).collect();
        for &j in joints.unwrap_or(&all) {
            let Some(gj) = g[j] else { continue };
            counted += 1;
            if let Some(pj) = p[j] {
                if (pj - gj).norm() <= radius {
                    hits += 1;
                }
            }
        }
    }
    let percentage = if counted == 0 {
        f64::NAN
    } else {
        100.0 * hits as f64 / counted as f64
    };
    Ok(PckResult {
        percentage,
        counted,
        skipped_frames: skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpjpeMode {
    Global,
    /// Both poses are expressed relative to their center hip.
    Centered,
    /// Centered, with the prediction rescaled by the least-squares factor.
    Normalized,
}

/// MPJPE report plus the frames where normalization fell back to scale 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MpjpeReport {
    pub report: MetricReport,
    pub unit_scale_frames: Vec<usize>,
}

fn joint(skel: &SkeletonModel, name: &'static str) -> Result<usize, MetricsError> {
    skel.joint_index(name).ok_or(MetricsError::MissingJoint(name))
}

fn joint_sided(skel: &SkeletonModel, base: &'static str, side: Side) -> Result<usize, MetricsError> {
    let mut name = alloc::string::String::from(base);
    name.push_str(side.suffix());
    skel.joint_index(&name).ok_or(MetricsError::MissingJoint(base))
}

/// Indices of the two hip joints.
pub fn hip_joints(skel: &SkeletonModel) -> Result<(usize, usize), MetricsError> {
    Ok((joint(skel, "hip_r")?, joint(skel, "hip_l")?))
}

fn center_hip(pose: &[Vector3<f64>], hips: (usize, usize)) -> Vector3<f64> {
    0.5 * (pose[hips.0] + pose[hips.1])
}

fn check_same_shape(a: &PoseTrajectory, b: &PoseTrajectory) -> Result<(), MetricsError> {
    if a.n_frames() != b.n_frames() {
        return Err(MetricsError::ShapeMismatch("frame count"));
    }
    if a.n_joints() != b.n_joints() {
        return Err(MetricsError::ShapeMismatch("joint count"));
    }
    Ok(())
}

/// Per-frame mean joint error over `joints` (all joints when `None`).
pub fn mpjpe(
    pred: &PoseTrajectory,
    gt: &PoseTrajectory,
    mode: MpjpeMode,
    joints: Option<&[usize]>,
    hips: (usize, usize),
) -> Result<MpjpeReport, MetricsError> {
    check_same_shape(pred, gt)?;
    let all: Vec<usize> = (0..gt.n_joints()).collect();
    let joints = joints.unwrap_or(&all);
    let mut unit_scale_frames = Vec::new();
    let series = (0..gt.n_frames())
        .map(|f| {
            let (p, g) = (pred.frame(f), gt.frame(f));
            let (pc, gc) = match mode {
                MpjpeMode::Global => (Vector3::zeros(), Vector3::zeros()),
                _ => (center_hip(p, hips), center_hip(g, hips)),
            };
            let scale = if mode == MpjpeMode::Normalized {
                let (mut pg, mut pp) = (0.0, 0.0);
                for &j in joints {
                    let a = p[j] - pc;
                    pg += a.dot(&(g[j] - gc));
                    pp += a.dot(&a);
                }
                if pp > 0.0 {
                    pg / pp
                } else {
                    unit_scale_frames.push(f);
                    1.0
                }
            } else {
                1.0
            };
            joints
                .iter()
                .map(|&j| ((p[j] - pc) * scale - (g[j] - gc)).norm())
                .sum::<f64>()
                / joints.len().max(1) as f64
        })
        .collect();
    Ok(MpjpeReport {
        report: MetricReport::from_series(series, Unit::Meters),
        unit_scale_frames,
    })
}

/// Mass-weighted mean of segment midpoints. With `present`, segments
/// touching a missing joint are dropped and the remaining weights
/// renormalized.
pub fn center_of_mass(
    pose: &[Vector3<f64>],
    skel: &SkeletonModel,
    present: Option<&[bool]>,
) -> Result<Vector3<f64>, MetricsError> {
    let mut sum = Vector3::zeros();
    let mut mass = 0.0;
    for seg in skel.masses() {
        let ok = |j: usize| present.map_or(true, |m| m[j]);
        if !ok(seg.a) || !ok(seg.b) {
            continue;
        }
        for j in [seg.a, seg.b] {
            if !pose[j].iter().all(|v| v.is_finite()) {
                return Err(MetricsError::MissingWeightedJoint(j));
            }
        }
        sum += seg.weight * 0.5 * (pose[seg.a] + pose[seg.b]);
        mass += seg.weight;
    }
    if mass <= 0.0 {
        return Err(MetricsError::EmptyMass);
    }
    Ok(sum / mass)
}

pub fn com_series(traj: &PoseTrajectory, skel: &SkeletonModel) -> Result<Vec<Vector3<f64>>, MetricsError> {
    traj.frames().map(|p| center_of_mass(p, skel, None)).collect()
}

/// Speeds between consecutive frames after Gaussian smoothing of each CoM
/// coordinate (`sigma` in frames; zero disables smoothing).
pub fn speed_series(com: &[Vector3<f64>], fps: f64, sigma: f64) -> Result<Vec<f64>, MetricsError> {
    if com.len() < 2 {
        return Err(MetricsError::TooShort);
    }
    let mut axes = [vec![], vec![], vec![]];
    for (d, axis) in axes.iter_mut().enumerate() {
        let raw: Vec<f64> = com.iter().map(|c| c[d]).collect();
        *axis = gaussian_smooth(&raw, sigma);
    }
    Ok((0..com.len() - 1)
        .map(|f| {
            let step = Vector3::new(
                axes[0][f + 1] - axes[0][f],
                axes[1][f + 1] - axes[1][f],
                axes[2][f + 1] - axes[2][f],
            );
            step.norm() * fps
        })
        .collect())
}

/// Angle between two vectors in degrees, with the cosine clamped to [-1, 1].
pub fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> Result<f64, MetricsError> {
    let (na, nb) = (a.norm(), b.norm());
    if na < DEGENERATE_LENGTH || nb < DEGENERATE_LENGTH {
        return Err(MetricsError::UndefinedAngle);
    }
    Ok((a.dot(b) / (na * nb)).clamp(-1.0, 1.0).acos().to_degrees())
}

/// Angle at the knee between thigh and shank; 180 for a straight leg.
pub fn knee_flexion(pose: &[Vector3<f64>], skel: &SkeletonModel, side: Side) -> Result<f64, MetricsError> {
    let hip = pose[joint_sided(skel, "hip", side)?];
    let knee = pose[joint_sided(skel, "knee", side)?];
    let ankle = pose[joint_sided(skel, "ankle", side)?];
    angle_between(&(hip - knee), &(ankle - knee))
}

/// Angle between the trunk (center hip to neck) and the thigh.
pub fn hip_flexion(pose: &[Vector3<f64>], skel: &SkeletonModel, side: Side) -> Result<f64, MetricsError> {
    let hips = hip_joints(skel)?;
    let neck = pose[joint(skel, "neck")?];
    let hip = pose[joint_sided(skel, "hip", side)?];
    let knee = pose[joint_sided(skel, "knee", side)?];
    angle_between(&(neck - center_hip(pose, hips)), &(knee - hip))
}

/// Leg with the larger knee flexion value.
pub fn outside_leg(pose: &[Vector3<f64>], skel: &SkeletonModel) -> Result<Side, MetricsError> {
    let r = knee_flexion(pose, skel, Side::Right)?;
    let l = knee_flexion(pose, skel, Side::Left)?;
    Ok(if r >= l { Side::Right } else { Side::Left })
}

/// Orthonormal ski frame: `x` along the outside ski, `z` normal to the ski
/// and the ankle-to-ankle direction, `y` completing the frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkiFrame {
    pub x: Vector3<f64>,
    pub y: Vector3<f64>,
    pub z: Vector3<f64>,
}

pub fn ski_frame(pose: &[Vector3<f64>], skel: &SkeletonModel, outside: Side) -> Result<SkiFrame, MetricsError> {
    let x = pose[joint_sided(skel, "ski_tip", outside)?] - pose[joint_sided(skel, "ski_tail", outside)?];
    let y = pose[joint(skel, "ankle_l")?] - pose[joint(skel, "ankle_r")?];
    let (nx, ny) = (x.norm(), y.norm());
    if nx < DEGENERATE_LENGTH || ny < DEGENERATE_LENGTH {
        return Err(MetricsError::DegenerateFrame);
    }
    let x = x / nx;
    let z = x.cross(&(y / ny));
    let nz = z.norm();
    if nz < 1e-9 {
        return Err(MetricsError::DegenerateFrame);
    }
    let z = z / nz;
    let y = z.cross(&x).normalize();
    Ok(SkiFrame { x, y, z })
}

/// Angle in degrees between `z` and the projection of `c` onto the plane
/// orthogonal to `normal`.
fn projected_angle(c: &Vector3<f64>, z: &Vector3<f64>, normal: &Vector3<f64>) -> Result<f64, MetricsError> {
    let proj = c - normal * c.dot(normal);
    angle_between(z, &proj)
}

/// Sideways inclination of the CoM relative to the ankle center.
pub fn lean_angle(
    pose: &[Vector3<f64>],
    skel: &SkeletonModel,
    com: &Vector3<f64>,
    outside: Side,
) -> Result<f64, MetricsError> {
    let frame = ski_frame(pose, skel, outside)?;
    let center = 0.5 * (pose[joint(skel, "ankle_l")?] + pose[joint(skel, "ankle_r")?]);
    projected_angle(&(com - center), &frame.z, &frame.x)
}

/// Forward or backward inclination of the CoM relative to the outside
/// ankle, and the corresponding horizontal distance `sin(angle) * |C|`.
pub fn fore_aft(
    pose: &[Vector3<f64>],
    skel: &SkeletonModel,
    com: &Vector3<f64>,
    outside: Side,
) -> Result<(f64, f64), MetricsError> {
    let frame = ski_frame(pose, skel, outside)?;
    let c = com - pose[joint_sided(skel, "ankle", outside)?];
    let angle = projected_angle(&c, &frame.z, &frame.y)?;
    Ok((angle, angle.to_radians().sin() * c.norm()))
}

/// Names of the summary entries, in report order.
pub const SUMMARY_KEYS: [&str; 13] = [
    "Global MPJPE",
    "Global Body MPJPE",
    "Centered MPJPE",
    "Centered Body MPJPE",
    "Normalized MPJPE",
    "Normalized Body MPJPE",
    "Global CoM Error",
    "Global speed MAE",
    "Knee flexion MAE",
    "Hip flexion MAE",
    "Lean angle MAE",
    "Fore/aft angle MAE",
    "Fore/aft distance MAE",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationConfig {
    pub fps: f64,
    /// Smoothing of both CoM series before speeds are taken, in frames.
    pub speed_sigma: f64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            fps: DEFAULT_FPS,
            speed_sigma: SPEED_SMOOTHING_SIGMA,
        }
    }
}

/// Every comparison metric between a prediction and the ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Reports keyed by [`SUMMARY_KEYS`], in that order.
    pub entries: Vec<(&'static str, MetricReport)>,
    /// Frames where the normalized MPJPE fell back to unit scale.
    pub unit_scale_frames: Vec<usize>,
}

impl Evaluation {
    pub fn get(&self, key: &str) -> Option<&MetricReport> {
        self.entries.iter().find(|(k, _)| *k == key).map(|(_, r)| r)
    }
}

fn abs_diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect()
}

/// Frame metric that yields NaN when undefined.
fn per_frame<F>(traj: &PoseTrajectory, mut f: F) -> Vec<f64>
where
    F: FnMut(usize, &[Vector3<f64>]) -> Result<f64, MetricsError>,
{
    (0..traj.n_frames())
        .map(|i| f(i, traj.frame(i)).unwrap_or(f64::NAN))
        .collect()
}

/// Compares `pred` against `gt`. Angle errors use the ground truth's
/// outside leg for both poses.
pub fn evaluate(
    pred: &PoseTrajectory,
    gt: &PoseTrajectory,
    skel: &SkeletonModel,
    cfg: &EvaluationConfig,
) -> Result<Evaluation, MetricsError> {
    check_same_shape(pred, gt)?;
    if gt.n_joints() != skel.n_joints() {
        return Err(MetricsError::ShapeMismatch("skeleton joint count"));
    }
    let hips = hip_joints(skel)?;
    let body = skel.body_subset();
    let mut unit_scale_frames = Vec::new();
    let mut entries = Vec::with_capacity(SUMMARY_KEYS.len());
    for (mode, subset) in [
        (MpjpeMode::Global, None),
        (MpjpeMode::Global, Some(body)),
        (MpjpeMode::Centered, None),
        (MpjpeMode::Centered, Some(body)),
        (MpjpeMode::Normalized, None),
        (MpjpeMode::Normalized, Some(body)),
    ] {
        let r = mpjpe(pred, gt, mode, subset, hips)?;
        unit_scale_frames.extend(r.unit_scale_frames);
        entries.push(r.report);
    }

    let com_p = com_series(pred, skel)?;
    let com_g = com_series(gt, skel)?;
    let com_err = com_p.iter().zip(&com_g).map(|(a, b)| (a - b).norm()).collect();
    entries.push(MetricReport::from_series(com_err, Unit::Meters));

    let speed = if gt.n_frames() >= 2 {
        let vp = speed_series(&com_p, cfg.fps, cfg.speed_sigma)?;
        let vg = speed_series(&com_g, cfg.fps, cfg.speed_sigma)?;
        abs_diff(&vp, &vg)
    } else {
        Vec::new()
    };
    entries.push(MetricReport::from_series(speed, Unit::MetersPerSecond));

    let both_sides = |traj: &PoseTrajectory, m: fn(&[Vector3<f64>], &SkeletonModel, Side) -> Result<f64, MetricsError>| {
        [Side::Right, Side::Left].map(|s| per_frame(traj, |_, p| m(p, skel, s)))
    };
    for m in [knee_flexion as fn(&[Vector3<f64>], &SkeletonModel, Side) -> Result<f64, MetricsError>, hip_flexion] {
        let (p, g) = (both_sides(pred, m), both_sides(gt, m));
        let series = (0..gt.n_frames())
            .map(|f| 0.5 * ((p[0][f] - g[0][f]).abs() + (p[1][f] - g[1][f]).abs()))
            .collect();
        entries.push(MetricReport::from_series(series, Unit::Degrees));
    }

    let outside: Vec<Option<Side>> = gt.frames().map(|p| outside_leg(p, skel).ok()).collect();
    let with_side = |traj: &PoseTrajectory, coms: &[Vector3<f64>], which: usize| {
        per_frame(traj, |f, p| {
            let side = outside[f].ok_or(MetricsError::UndefinedAngle)?;
            match which {
                0 => lean_angle(p, skel, &coms[f], side),
                1 => fore_aft(p, skel, &coms[f], side).map(|r| r.0),
                _ => fore_aft(p, skel, &coms[f], side).map(|r| r.1),
            }
        })
    };
    for (which, unit) in [(0, Unit::Degrees), (1, Unit::Degrees), (2, Unit::Meters)] {
        let series = abs_diff(&with_side(pred, &com_p, which), &with_side(gt, &com_g, which));
        entries.push(MetricReport::from_series(series, unit));
    }

    Ok(Evaluation {
        entries: SUMMARY_KEYS.iter().copied().zip(entries).collect(),
        unit_scale_frames,
    })
}
