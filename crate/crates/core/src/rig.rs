//! Camera rigs: fixed positions, known intrinsics, optional rotation tracks.

use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::camera::{CameraExtrinsics, CameraIntrinsics};
use crate::trajectory::RotationTrack;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RigError {
    #[error("rig has no cameras")]
    Empty,
    #[error("camera {camera}: expected {expected} frames, found {found}")]
    FrameCountMismatch {
        camera: usize,
        expected: usize,
        found: usize,
    },
    #[error("unknown camera {0}")]
    UnknownCamera(usize),
    #[error("camera {0} has no rotation track")]
    MissingRotations(usize),
}

/// Intrinsics that are either constant or given per frame (zoom).
#[derive(Debug, Clone, PartialEq)]
pub enum IntrinsicsTrack {
    Fixed(CameraIntrinsics),
    PerFrame(Vec<CameraIntrinsics>),
}

impl IntrinsicsTrack {
    #[inline]
    pub fn at(&self, frame: usize) -> &CameraIntrinsics {
        match self {
            Self::Fixed(k) => k,
            Self::PerFrame(ks) => &ks[frame],
        }
    }
}

/// One camera of the rig. The center is fixed; orientation may vary per
/// frame and may be unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct RigCamera {
    pub position: Vector3<f64>,
    pub intrinsics: IntrinsicsTrack,
    pub rotations: Option<RotationTrack>,
}

impl RigCamera {
    pub fn new(position: Vector3<f64>, intrinsics: IntrinsicsTrack) -> Self {
        Self {
            position,
            intrinsics,
            rotations: None,
        }
    }

    pub fn with_rotations(mut self, rotations: RotationTrack) -> Self {
        self.rotations = Some(rotations);
        self
    }

    #[inline]
    pub fn intrinsics_at(&self, frame: usize) -> &CameraIntrinsics {
        self.intrinsics.at(frame)
    }

    /// Extrinsics at `frame`, if the rotation is known.
    pub fn extrinsics_at(&self, frame: usize) -> Option<CameraExtrinsics> {
        self.rotations
            .as_ref()
            .map(|r| CameraExtrinsics::from_center(r[frame], &self.position))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraRig {
    n_frames: usize,
    cameras: Vec<RigCamera>,
}

impl CameraRig {
    pub fn new(n_frames: usize, cameras: Vec<RigCamera>) -> Result<Self, RigError> {
        if cameras.is_empty() {
            return Err(RigError::Empty);
        }
        for (c, cam) in cameras.iter().enumerate() {
            if let IntrinsicsTrack::PerFrame(ks) = &cam.intrinsics {
                if ks.len() != n_frames {
                    return Err(RigError::FrameCountMismatch {
                        camera: c,
                        expected: n_frames,
                        found: ks.len(),
                    });
                }
            }
            if let Some(r) = &cam.rotations {
                if r.len() != n_frames {
                    return Err(RigError::FrameCountMismatch {
                        camera: c,
                        expected: n_frames,
                        found: r.len(),
                    });
                }
            }
        }
        Ok(Self { n_frames, cameras })
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_cameras(&self) -> usize {
        self.cameras.len()
    }

    pub fn cameras(&self) -> &[RigCamera] {
        &self.cameras
    }

    pub fn camera(&self, c: usize) -> &RigCamera {
        &self.cameras[c]
    }

    /// True when every camera carries a rotation track.
    pub fn has_rotations(&self) -> bool {
        self.cameras.iter().all(|c| c.rotations.is_some())
    }

    pub fn rotation_tracks(&self) -> Result<Vec<&RotationTrack>, RigError> {
        self.cameras
            .iter()
            .enumerate()
            .map(|(c, cam)| cam.rotations.as_ref().ok_or(RigError::MissingRotations(c)))
            .collect()
    }

    /// Mean of the camera centers.
    pub fn centroid(&self) -> Vector3<f64> {
        self.cameras.iter().map(|c| c.position).sum::<Vector3<f64>>() / self.cameras.len() as f64
    }

    /// Keeps only the listed cameras, in the given order.
    pub fn select(&self, cameras: &[usize]) -> Result<Self, RigError> {
        let picked = cameras
            .iter()
            .map(|&c| self.cameras.get(c).cloned().ok_or(RigError::UnknownCamera(c)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(self.n_frames, picked)
    }

    /// Same rig with all rotation tracks dropped.
    pub fn without_rotations(&self) -> Self {
        let mut out = self.clone();
        for c in &mut out.cameras {
            c.rotations = None;
        }
        out
    }

    /// Same rig with the given rotation tracks attached.
    pub fn with_rotation_tracks(&self, tracks: Vec<RotationTrack>) -> Result<Self, RigError> {
        let cams = self
            .cameras
            .iter()
            .zip(tracks)
            .map(|(c, r)| c.clone().with_rotations(r))
            .collect();
        Self::new(self.n_frames, cams)
    }
}

/// Nearest rotation in the Frobenius sense (orthogonal polar factor).
pub fn nearest_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut d = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    u * d * v_t
}
