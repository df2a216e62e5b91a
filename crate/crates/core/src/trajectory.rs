//! Decoded world-space joint trajectories.

use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector3};

/// Per-camera world-to-camera rotations, one per frame.
pub type RotationTrack = Vec<Matrix3<f64>>;

/// Joint positions in meters, indexed by `(frame, joint)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseTrajectory {
    n_frames: usize,
    n_joints: usize,
    positions: Vec<Vector3<f64>>,
}

impl PoseTrajectory {
    pub fn new(n_frames: usize, n_joints: usize, positions: Vec<Vector3<f64>>) -> Self {
        assert_eq!(positions.len(), n_frames * n_joints, "positions shape");
        Self {
            n_frames,
            n_joints,
            positions,
        }
    }

    pub fn from_frames(frames: &[Vec<Vector3<f64>>]) -> Self {
        let n_joints = frames.first().map_or(0, |f| f.len());
        let positions: Vec<_> = frames.iter().flat_map(|f| f.iter().copied()).collect();
        Self::new(frames.len(), n_joints, positions)
    }

    /// Builds from channel-major samples (`[joint * 3 + axis][frame]`).
    pub fn from_channels(n_frames: usize, n_joints: usize, channels: &[f64]) -> Self {
        assert_eq!(channels.len(), n_frames * n_joints * 3, "channel shape");
        let mut positions = Vec::with_capacity(n_frames * n_joints);
        for f in 0..n_frames {
            for j in 0..n_joints {
                positions.push(Vector3::new(
                    channels[(j * 3) * n_frames + f],
                    channels[(j * 3 + 1) * n_frames + f],
                    channels[(j * 3 + 2) * n_frames + f],
                ));
            }
        }
        Self::new(n_frames, n_joints, positions)
    }

    /// Channel-major samples, inverse of [`Self::from_channels`].
    pub fn to_channels(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.positions.len() * 3];
        for f in 0..self.n_frames {
            for j in 0..self.n_joints {
                let p = self.joint(f, j);
                for d in 0..3 {
                    out[(j * 3 + d) * self.n_frames + f] = p[d];
                }
            }
        }
        out
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_joints(&self) -> usize {
        self.n_joints
    }

    #[inline]
    pub fn joint(&self, frame: usize, joint: usize) -> &Vector3<f64> {
        &self.positions[frame * self.n_joints + joint]
    }

    pub fn frame(&self, frame: usize) -> &[Vector3<f64>] {
        &self.positions[frame * self.n_joints..(frame + 1) * self.n_joints]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[Vector3<f64>]> {
        self.positions.chunks(self.n_joints.max(1))
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    /// Mean over joints for every frame.
    pub fn centroids(&self) -> Vec<Vector3<f64>> {
        self.frames()
            .map(|f| f.iter().sum::<Vector3<f64>>() / f.len().max(1) as f64)
            .collect()
    }

    /// Mean squared second difference of joint positions (m^2 per frame^4).
    pub fn mean_squared_acceleration(&self) -> f64 {
        if self.n_frames < 3 {
            return 0.0;
        }
        let mut acc = 0.0;
        for f in 1..self.n_frames - 1 {
            for j in 0..self.n_joints {
                let a = self.joint(f + 1, j) - 2.0 * self.joint(f, j) + self.joint(f - 1, j);
                acc += a.norm_squared();
            }
        }
        acc / ((self.n_frames - 2) * self.n_joints) as f64
    }
}
