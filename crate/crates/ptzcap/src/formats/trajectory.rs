//! Reconstructed (or ground-truth) 3D joint trajectories, optionally with
//! per-camera rotation tracks.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Vector3;
use ptzcap_core::trajectory::{PoseTrajectory, RotationTrack};
use serde::{Deserialize, Serialize};

use super::{check_index, check_rotation, create, from_row_major, open, read_jsonl, to_row_major, write_jsonl};
use crate::error::FormatError;
use crate::formats::cameras::ROTATION_TOLERANCE;

pub const KIND: &str = "ptzcap-trajectory";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub n_frames: usize,
    pub joints: Vec<String>,
    /// Cameras with a rotation track in this file; 0 when there are none.
    #[serde(default)]
    pub n_cameras: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPosition {
    pub id: usize,
    pub x_m: f64,
    pub y_m: f64,
    pub z_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TrajectoryRecord {
    Frame {
        frame: usize,
        joints: Vec<JointPosition>,
    },
    Rotation {
        camera_id: usize,
        frame: usize,
        #[serde(rename = "R")]
        r: [f64; 9],
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFile {
    pub joints: Vec<String>,
    pub trajectory: PoseTrajectory,
    pub rotations: Option<Vec<RotationTrack>>,
}

impl TrajectoryFile {
    pub fn write<W: Write>(&self, out: W) -> Result<(), FormatError> {
        let traj = &self.trajectory;
        let meta = TrajectoryMeta {
            n_frames: traj.n_frames(),
            joints: self.joints.clone(),
            n_cameras: self.rotations.as_ref().map_or(0, |r| r.len()),
        };
        let frames = (0..traj.n_frames()).map(|f| TrajectoryRecord::Frame {
            frame: f,
            joints: traj
                .frame(f)
                .iter()
                .enumerate()
                .map(|(id, p)| JointPosition {
                    id,
                    x_m: p.x,
                    y_m: p.y,
                    z_m: p.z,
                })
                .collect(),
        });
        let rotations = self.rotations.iter().flatten().enumerate().flat_map(|(c, track)| {
            track.iter().enumerate().map(move |(f, r)| TrajectoryRecord::Rotation {
                camera_id: c,
                frame: f,
                r: to_row_major(r),
            })
        });
        write_jsonl(out, KIND, &meta, frames.chain(rotations))
    }

    pub fn read<R: Read>(input: R) -> Result<Self, FormatError> {
        let (meta, records): (TrajectoryMeta, Vec<(usize, TrajectoryRecord)>) = read_jsonl(input, KIND)?;
        let (nf, nj) = (meta.n_frames, meta.joints.len());
        let mut positions: Vec<Option<Vector3<f64>>> = vec![None; nf * nj];
        let mut rotations = vec![vec![None; nf]; meta.n_cameras];
        for (line, rec) in records {
            match rec {
                TrajectoryRecord::Frame { frame, joints } => {
                    check_index(line, "frame", frame, nf)?;
                    for j in joints {
                        check_index(line, "joint id", j.id, nj)?;
                        let p = Vector3::new(j.x_m, j.y_m, j.z_m);
                        if !p.iter().all(|v| v.is_finite()) {
                            return Err(FormatError::invalid(line, "non-finite coordinate"));
                        }
                        positions[frame * nj + j.id] = Some(p);
                    }
                }
                TrajectoryRecord::Rotation { camera_id, frame, r } => {
                    check_index(line, "camera_id", camera_id, meta.n_cameras)?;
                    check_index(line, "frame", frame, nf)?;
                    let m = from_row_major(&r);
                    if !check_rotation(&m, ROTATION_TOLERANCE) {
                        return Err(FormatError::invalid(line, "R is not a rotation"));
                    }
                    rotations[camera_id][frame] = Some(m);
                }
            }
        }
        let positions = positions
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                p.ok_or_else(|| {
                    FormatError::invalid(0, format_args!("missing joint {} in frame {}", i % nj.max(1), i / nj.max(1)))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let rotations = if meta.n_cameras == 0 {
            None
        } else {
            let tracks = rotations
                .into_iter()
                .enumerate()
                .map(|(c, t)| {
                    t.into_iter()
                        .enumerate()
                        .map(|(f, r)| {
                            r.ok_or_else(|| {
                                FormatError::invalid(0, format_args!("missing rotation of camera {c} in frame {f}"))
                            })
                        })
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            Some(tracks)
        };
        Ok(Self {
            joints: meta.joints,
            trajectory: PoseTrajectory::new(nf, nj, positions),
            rotations,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), FormatError> {
        self.write(create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self, FormatError> {
        Self::read(open(path)?)
    }
}
