//! Synthetic ground-truth scenes.
//!
//! A skier is animated with rigid limb chains along a slalom path, watched by
//! pan-tilt cameras placed on a circle around the course. Every time-varying
//! quantity is built from `cos(m * pi * tau)` terms with
//! `tau = (f + 1/2) / n_frames`, so trajectories start and end at rest and
//! are well approximated by a short cosine basis.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Matrix3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::camera::{
    axis_angle, look_at_with_fov_shift, project, CameraExtrinsics, CameraIntrinsics,
};
use crate::observation::{Detection, ObservationSet};
use crate::rig::{CameraRig, IntrinsicsTrack, RigCamera};
use crate::rotation_from_background::{CorrespondenceSet, PointPair, RotationDeltas};
use crate::skeleton::{rest_pose, SkeletonModel, DEFAULT_JOINTS};
use crate::trajectory::{PoseTrajectory, RotationTrack};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("athlete is outside every camera view at frame {frame}")]
    AthleteNotVisible { frame: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n_cameras: usize,
    pub n_frames: usize,
    pub fps: f64,
    pub speed_mps: f64,
    /// Standard deviation of the isotropic 2D detection noise, in pixels.
    pub noise_px: f64,
    /// Probability that a detection is dropped.
    pub dropout_rate: f64,
    /// Probability that a detection is replaced by a uniform random pixel.
    pub outlier_rate: f64,
    /// Background correspondences per camera and frame pair.
    pub background_points: usize,
    pub background_noise_px: f64,
    /// Probability that a background match is replaced by a random pixel.
    pub background_outlier_rate: f64,
    pub camera_radius_m: f64,
    pub focal_px: f64,
    pub image_size: (f64, f64),
    /// Amplitude of the smooth per-axis orientation jitter, in degrees.
    pub jitter_deg: f64,
    /// Lateral slalom amplitude, in meters.
    pub slalom_amplitude_m: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_cameras: 6,
            n_frames: 250,
            fps: 50.0,
            speed_mps: 17.0,
            noise_px: 0.0,
            dropout_rate: 0.0,
            outlier_rate: 0.0,
            background_points: 40,
            background_noise_px: 0.0,
            background_outlier_rate: 0.0,
            camera_radius_m: 50.0,
            focal_px: 3000.0,
            image_size: (1920.0, 1080.0),
            jitter_deg: 0.5,
            slalom_amplitude_m: 3.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidConfig(String::from(m)));
        if self.n_cameras < 1 {
            return bad("need at least one camera");
        }
        if self.n_frames < 2 {
            return bad("need at least two frames");
        }
        if !(self.fps > 0.0) || !(self.speed_mps >= 0.0) {
            return bad("fps must be positive and speed nonnegative");
        }
        if !(self.noise_px >= 0.0) || !(self.background_noise_px >= 0.0) {
            return bad("noise must be nonnegative");
        }
        for (name, r) in [
            ("dropout_rate", self.dropout_rate),
            ("outlier_rate", self.outlier_rate),
            ("background_outlier_rate", self.background_outlier_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(SynthError::InvalidConfig(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.camera_radius_m > 0.0) || !(self.focal_px > 0.0) {
            return bad("camera radius and focal length must be positive");
        }
        Ok(())
    }
}

/// Everything needed to run and score the pipeline on synthetic data.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub config: SynthConfig,
    pub skeleton: SkeletonModel,
    pub gt_trajectory: PoseTrajectory,
    pub gt_rotation_tracks: Vec<RotationTrack>,
    /// Exact deltas of the ground-truth rotation tracks.
    pub gt_deltas: RotationDeltas,
    /// Rig with the ground-truth rotation tracks attached.
    pub rig: CameraRig,
    pub observations: ObservationSet,
    pub correspondences: CorrespondenceSet,
}

impl SyntheticScene {
    /// Rig with positions and intrinsics only.
    pub fn uncalibrated_rig(&self) -> CameraRig {
        self.rig.without_rotations()
    }
}

/// Normalized frame time in (0, 1).
fn tau(f: usize, n_frames: usize) -> f64 {
    (f as f64 + 0.5) / n_frames as f64
}

fn cosm(m: f64, t: f64) -> f64 {
    (m * PI * t).cos()
}

fn rot_y(a: f64) -> Matrix3<f64> {
    axis_angle(&Vector3::y(), a)
}

/// Hip-center position of the skier, in meters.
fn root_position(cfg: &SynthConfig, t: f64, k: f64) -> Vector3<f64> {
    let duration = cfg.n_frames as f64 / cfg.fps;
    let length = cfg.speed_mps * duration;
    Vector3::new(
        -0.5 * length * cosm(1.0, t),
        cfg.slalom_amplitude_m * cosm(k, t),
        0.97 + 0.04 * cosm(2.0 * k, t),
    )
}

/// Number of slalom half-periods: roughly one turn pair per second.
fn slalom_frequency(cfg: &SynthConfig) -> f64 {
    (cfg.n_frames as f64 / cfg.fps).round().max(1.0)
}

/// World joint positions for one frame.
fn skier_pose(cfg: &SynthConfig, t: f64) -> [Vector3<f64>; 24] {
    let k = slalom_frequency(cfg);
    let rest = rest_pose();
    let idx = |name: &str| DEFAULT_JOINTS.iter().position(|n| *n == name).expect("joint");
    let mut p = rest;

    // rotate a chain of joints about `pivot`
    let rotate = |p: &mut [Vector3<f64>; 24], joints: &[&str], pivot: Vector3<f64>, r: &Matrix3<f64>| {
        for j in joints {
            let i = idx(j);
            p[i] = pivot + r * (p[i] - pivot);
        }
    };

    for (side, phase) in [("r", 1.0), ("l", -1.0)] {
        let j = |n: &str| format!("{n}_{side}");
        // legs: thigh forward, shank back, foot and ski restored to level
        let flex = 0.45 + 0.15 * phase * cosm(k, t) + 0.05 * cosm(2.0 * k, t);
        let hip = p[idx(&j("hip"))];
        let below_hip = [
            j("knee"),
            j("ankle"),
            j("toes"),
            j("heel"),
            j("ski_tip"),
            j("ski_tail"),
        ];
        let names: Vec<&str> = below_hip.iter().map(String::as_str).collect();
        rotate(&mut p, &names, hip, &rot_y(-flex));
        let knee = p[idx(&j("knee"))];
        rotate(&mut p, &names[1..], knee, &rot_y(2.0 * flex));
        let ankle = p[idx(&j("ankle"))];
        rotate(&mut p, &names[2..], ankle, &rot_y(-flex));

        // arms: swing at the shoulder, bend at the elbow, plant the pole
        let swing = 0.25 + 0.2 * phase * cosm(k, t);
        let bend = 0.5 + 0.1 * cosm(2.0 * k, t);
        let arm = [j("elbow"), j("hand"), j("pole_basket")];
        let arm: Vec<&str> = arm.iter().map(String::as_str).collect();
        let shoulder = p[idx(&j("shoulder"))];
        rotate(&mut p, &arm, shoulder, &rot_y(-swing));
        let elbow = p[idx(&j("elbow"))];
        rotate(&mut p, &arm[1..], elbow, &rot_y(-bend));
        let hand = p[idx(&j("hand"))];
        rotate(&mut p, &arm[2..], hand, &rot_y(0.6 + 0.2 * phase * cosm(k, t)));
    }

    // torso bends forward about the hip axis
    let upper = [
        "head",
        "neck",
        "shoulder_r",
        "elbow_r",
        "hand_r",
        "pole_basket_r",
        "shoulder_l",
        "elbow_l",
        "hand_l",
        "pole_basket_l",
    ];
    let bend = 0.35 + 0.06 * cosm(2.0 * k, t);
    rotate(&mut p, &upper, Vector3::zeros(), &rot_y(bend));

    // whole body: heading, inward lean and a slight pitch
    let heading = 0.25 * cosm(k, t) + 0.05 * cosm(1.0, t);
    let lean = -0.3 * cosm(k, t);
    let pitch = 0.05 * cosm(2.0, t);
    let body = axis_angle(&Vector3::z(), heading)
        * axis_angle(&Vector3::y(), pitch)
        * axis_angle(&Vector3::x(), lean);
    let root = root_position(cfg, t, k);
    p.map(|v| root + body * v)
}

fn camera_positions(cfg: &SynthConfig) -> Vec<Vector3<f64>> {
    (0..cfg.n_cameras)
        .map(|c| {
            let angle = PI / 6.0 + 2.0 * PI * c as f64 / cfg.n_cameras as f64;
            let height = 3.0 + 5.0 * ((c * 7) % 6) as f64 / 5.0;
            Vector3::new(
                cfg.camera_radius_m * angle.cos(),
                cfg.camera_radius_m * angle.sin(),
                height,
            )
        })
        .collect()
}

/// Smooth small rotation added to the exact look-at orientation.
fn jitter(cfg: &SynthConfig, c: usize, t: f64) -> Matrix3<f64> {
    let a = cfg.jitter_deg.to_radians();
    let ph = c as f64;
    let rx = a * cosm(2.0 + (c % 3) as f64, t) * (0.7 + 0.1 * ph).cos();
    let ry = a * cosm(3.0 + (c % 2) as f64, t);
    let rz = 0.3 * a * cosm(1.0 + (c % 4) as f64, t);
    axis_angle(&Vector3::x(), rx) * axis_angle(&Vector3::y(), ry) * axis_angle(&Vector3::z(), rz)
}

/// Scene with the default layout and the given headline parameters.
pub fn generate_scene(
    n_cameras: usize,
    n_frames: usize,
    speed_mps: f64,
    noise_px: f64,
    seed: u64,
) -> Result<SyntheticScene, SynthError> {
    generate_scene_with(&SynthConfig {
        n_cameras,
        n_frames,
        speed_mps,
        noise_px,
        seed,
        ..SynthConfig::default()
    })
}

pub fn generate_scene_with(cfg: &SynthConfig) -> Result<SyntheticScene, SynthError> {
    cfg.validate()?;
    let (nf, nc) = (cfg.n_frames, cfg.n_cameras);
    let skeleton = SkeletonModel::default_skier();
    let nj = skeleton.n_joints();
    let frames: Vec<Vec<Vector3<f64>>> = (0..nf).map(|f| skier_pose(cfg, tau(f, nf)).to_vec()).collect();
    let gt_trajectory = PoseTrajectory::from_frames(&frames);
    let centroids = gt_trajectory.centroids();

    let (w, h) = cfg.image_size;
    let intr = CameraIntrinsics::from_focal(cfg.focal_px, cfg.focal_px, w / 2.0, h / 2.0, w, h)
        .map_err(|e| SynthError::InvalidConfig(format!("{e}")))?;
    let positions = camera_positions(cfg);
    let center = Vector2::new(0.5, 0.5);
    let mut tracks = Vec::with_capacity(nc);
    for (c, pos) in positions.iter().enumerate() {
        let mut track = Vec::with_capacity(nf);
        for f in 0..nf {
            let look = look_at_with_fov_shift(pos, &centroids[f], &Vector3::z(), &intr, &center)
                .map_err(|e| SynthError::InvalidConfig(format!("camera {c}: {e}")))?;
            track.push(jitter(cfg, c, tau(f, nf)) * look.rotation);
        }
        tracks.push(track);
    }
    let cameras = positions
        .iter()
        .zip(&tracks)
        .map(|(p, t)| RigCamera::new(*p, IntrinsicsTrack::Fixed(intr)).with_rotations(t.clone()))
        .collect();
    let rig = CameraRig::new(nf, cameras).expect("consistent by construction");

    let mut obs_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    obs_rng.set_stream(1);
    let noise = Normal::new(0.0, cfg.noise_px.max(0.0)).expect("valid sigma");
    let mut observations = ObservationSet::new(nf, nc, nj);
    for f in 0..nf {
        let mut any_visible = false;
        for c in 0..nc {
            let extr = CameraExtrinsics::from_center(tracks[c][f], &positions[c]);
            for j in 0..nj {
                let Ok(px) = project(gt_trajectory.joint(f, j), &intr, &extr) else {
                    continue;
                };
                if !intr.contains(&px) {
                    continue;
                }
                any_visible = true;
                // draw every random number unconditionally so that rates do
                // not shift the noise sequence
                let n = Vector2::new(noise.sample(&mut obs_rng), noise.sample(&mut obs_rng));
                let drop = obs_rng.random::<f64>() < cfg.dropout_rate;
                let outlier = obs_rng.random::<f64>() < cfg.outlier_rate;
                let random_px = Vector2::new(obs_rng.random::<f64>() * w, obs_rng.random::<f64>() * h);
                if drop {
                    continue;
                }
                let pixel = if outlier {
                    random_px
                } else if cfg.noise_px > 0.0 {
                    px + n
                } else {
                    px
                };
                observations
                    .set(f, c, j, Some(Detection { pixel, confidence: 1.0 }))
                    .expect("indices in range");
            }
        }
        if !any_visible {
            return Err(SynthError::AthleteNotVisible { frame: f });
        }
    }

    let correspondences = background(cfg, &intr, &positions, &tracks, &gt_trajectory);
    let gt_deltas = RotationDeltas::from_tracks(&tracks);
    Ok(SyntheticScene {
        config: *cfg,
        skeleton,
        gt_trajectory,
        gt_rotation_tracks: tracks,
        gt_deltas,
        rig,
        observations,
        correspondences,
    })
}

/// Static background points seen by each rotating camera. Pixels are drawn
/// outside the athlete's bounding box in frame `f`, lifted to a depth
/// 20-100 m beyond the athlete, and reprojected into frame `f + 1`.
fn background(
    cfg: &SynthConfig,
    intr: &CameraIntrinsics,
    positions: &[Vector3<f64>],
    tracks: &[RotationTrack],
    gt: &PoseTrajectory,
) -> CorrespondenceSet {
    let (nf, nc) = (cfg.n_frames, cfg.n_cameras);
    let (w, h) = cfg.image_size;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(2);
    let noise = Normal::new(0.0, cfg.background_noise_px.max(0.0)).expect("valid sigma");
    let mut set = CorrespondenceSet::new(nc, nf);
    let k_inv = intr.k_inv();
    for c in 0..nc {
        for f in 0..nf - 1 {
            let e0 = CameraExtrinsics::from_center(tracks[c][f], &positions[c]);
            let e1 = CameraExtrinsics::from_center(tracks[c][f + 1], &positions[c]);
            let (mut lo, mut hi) = (Vector2::new(w, h), Vector2::zeros());
            let mut depth = 0.0f64;
            for j in 0..gt.n_joints() {
                let p = gt.joint(f, j);
                depth = depth.max(e0.to_camera(p).z);
                if let Ok(px) = project(p, intr, &e0) {
                    lo = lo.inf(&px);
                    hi = hi.sup(&px);
                }
            }
            let margin = Vector2::new(20.0, 20.0);
            let (lo, hi) = (lo - margin, hi + margin);
            let mut points = Vec::with_capacity(cfg.background_points);
            let mut attempts = 0;
            while points.len() < cfg.background_points && attempts < 50 * cfg.background_points {
                attempts += 1;
                let src = Vector2::new(rng.random::<f64>() * w, rng.random::<f64>() * h);
                let d = depth + rng.random_range(20.0..100.0);
                let n = [
                    noise.sample(&mut rng),
                    noise.sample(&mut rng),
                    noise.sample(&mut rng),
                    noise.sample(&mut rng),
                ];
                let outlier = rng.random::<f64>() < cfg.background_outlier_rate;
                let random_px = Vector2::new(rng.random::<f64>() * w, rng.random::<f64>() * h);
                if src.x > lo.x && src.x < hi.x && src.y > lo.y && src.y < hi.y {
                    continue;
                }
                let ray = k_inv * Vector3::new(src.x, src.y, 1.0);
                let world = positions[c] + e0.rotation.transpose() * (ray * d);
                let Ok(dst) = project(&world, intr, &e1) else {
                    continue;
                };
                if !intr.contains(&dst) {
                    continue;
                }
                let dst = if outlier {
                    random_px
                } else {
                    dst + Vector2::new(n[2], n[3])
                };
                points.push(PointPair::new(src + Vector2::new(n[0], n[1]), dst));
            }
            set.set(c, f, points);
        }
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            n_cameras: 3,
            n_frames: 40,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn limb_lengths_are_rigid() {
        let scene = generate_scene_with(&small()).unwrap();
        for limb in scene.skeleton.limbs() {
            for f in 0..scene.config.n_frames {
                let len = (scene.gt_trajectory.joint(f, limb.a) - scene.gt_trajectory.joint(f, limb.b)).norm();
                assert!((len - limb.length).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn noise_free_observations_are_projections() {
        let scene = generate_scene_with(&small()).unwrap();
        let mut seen = 0;
        for f in 0..40 {
            for c in 0..3 {
                let extr = scene.rig.camera(c).extrinsics_at(f).unwrap();
                let intr = scene.rig.camera(c).intrinsics_at(f);
                for j in 0..24 {
                    let d = scene.observations.get(f, c, j).expect("all joints visible");
                    let p = project(scene.gt_trajectory.joint(f, j), intr, &extr).unwrap();
                    assert_eq!(d.pixel, p);
                    seen += 1;
                }
            }
        }
        assert_eq!(seen, 40 * 3 * 24);
    }

    #[test]
    fn seeds_are_deterministic() {
        let cfg = SynthConfig {
            noise_px: 2.0,
            ..small()
        };
        assert_eq!(generate_scene_with(&cfg).unwrap(), generate_scene_with(&cfg).unwrap());
        let other = generate_scene_with(&SynthConfig { seed: 9, ..cfg }).unwrap();
        assert_ne!(generate_scene_with(&cfg).unwrap().observations, other.observations);
    }

    #[test]
    fn minimal_scene() {
        let s = generate_scene(1, 2, 17.0, 0.0, 0).unwrap();
        assert_eq!(s.observations.n_frames(), 2);
        assert_eq!(s.correspondences.get(0, 0).len(), 40);
        assert!(generate_scene(0, 2, 17.0, 0.0, 0).is_err());
        assert!(generate_scene(1, 1, 17.0, 0.0, 0).is_err());
    }
}
