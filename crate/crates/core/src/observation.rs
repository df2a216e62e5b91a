//! Per-frame, per-camera 2D joint detections.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Vector2;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ObservationError {
    #[error("index out of range (frame {frame}, camera {camera}, joint {joint})")]
    OutOfRange {
        frame: usize,
        camera: usize,
        joint: usize,
    },
    #[error("confidence {0} is outside [0, 1]")]
    InvalidConfidence(f64),
    #[error("non-finite pixel coordinate")]
    NonFinite,
    #[error("unknown camera {0}")]
    UnknownCamera(usize),
}

/// A 2D keypoint with its detector confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub pixel: Vector2<f64>,
    pub confidence: f64,
}

/// Detections indexed by `(frame, camera, joint)`; `None` marks a joint
/// that was not detected.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    n_frames: usize,
    n_cameras: usize,
    n_joints: usize,
    detections: Vec<Option<Detection>>,
}

impl ObservationSet {
    pub fn new(n_frames: usize, n_cameras: usize, n_joints: usize) -> Self {
        Self {
            n_frames,
            n_cameras,
            n_joints,
            detections: vec![None; n_frames * n_cameras * n_joints],
        }
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_cameras(&self) -> usize {
        self.n_cameras
    }

    pub fn n_joints(&self) -> usize {
        self.n_joints
    }

    #[inline]
    fn index(&self, frame: usize, camera: usize, joint: usize) -> usize {
        (frame * self.n_cameras + camera) * self.n_joints + joint
    }

    pub fn set(
        &mut self,
        frame: usize,
        camera: usize,
        joint: usize,
        detection: Option<Detection>,
    ) -> Result<(), ObservationError> {
        if frame >= self.n_frames || camera >= self.n_cameras || joint >= self.n_joints {
            return Err(ObservationError::OutOfRange {
                frame,
                camera,
                joint,
            });
        }
        if let Some(d) = &detection {
            if !(0.0..=1.0).contains(&d.confidence) {
                return Err(ObservationError::InvalidConfidence(d.confidence));
            }
            if !(d.pixel.x.is_finite() && d.pixel.y.is_finite()) {
                return Err(ObservationError::NonFinite);
            }
        }
        let i = self.index(frame, camera, joint);
        self.detections[i] = detection;
        Ok(())
    }

    #[inline]
    pub fn get(&self, frame: usize, camera: usize, joint: usize) -> Option<&Detection> {
        self.detections[self.index(frame, camera, joint)].as_ref()
    }

    /// Detections of all joints for one frame and camera.
    pub fn view(&self, frame: usize, camera: usize) -> &[Option<Detection>] {
        let start = self.index(frame, camera, 0);
        &self.detections[start..start + self.n_joints]
    }

    pub fn visible_count(&self) -> usize {
        self.detections.iter().filter(|d| d.is_some()).count()
    }

    /// Mean pixel position of the detected joints, if any.
    pub fn subject_centroid(&self, frame: usize, camera: usize) -> Option<Vector2<f64>> {
        let mut sum = Vector2::zeros();
        let mut count = 0usize;
        for d in self.view(frame, camera).iter().flatten() {
            sum += d.pixel;
            count += 1;
        }
        (count > 0).then(|| sum / count as f64)
    }

    /// Keeps only the listed cameras, in the given order.
    pub fn select_cameras(&self, cameras: &[usize]) -> Result<Self, ObservationError> {
        if let Some(&bad) = cameras.iter().find(|&&c| c >= self.n_cameras) {
            return Err(ObservationError::UnknownCamera(bad));
        }
        let mut out = Self::new(self.n_frames, cameras.len(), self.n_joints);
        for f in 0..self.n_frames {
            for (new_c, &c) in cameras.iter().enumerate() {
                for j in 0..self.n_joints {
                    let i = out.index(f, new_c, j);
                    out.detections[i] = self.get(f, c, j).copied();
                }
            }
        }
        Ok(out)
    }
}
