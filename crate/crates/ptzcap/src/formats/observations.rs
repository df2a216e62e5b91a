//! 2D joint detections, one record per camera and frame.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Vector2;
use ptzcap_core::observation::{Detection, ObservationSet};
use serde::{Deserialize, Serialize};

use super::{check_index, create, open, read_jsonl, write_jsonl};
use crate::error::FormatError;

pub const KIND: &str = "ptzcap-observations";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationsMeta {
    pub n_frames: usize,
    pub n_cameras: usize,
    /// Joint names; record joint ids index into this list.
    pub joints: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointRecord {
    pub id: usize,
    pub x_px: f64,
    pub y_px: f64,
    pub confidence: f64,
    pub visible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    pub camera_id: usize,
    pub frame: usize,
    pub joints: Vec<JointRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationFile {
    pub joints: Vec<String>,
    pub set: ObservationSet,
    /// `(camera, frame)` pairs without a record. Their detections are empty.
    pub gaps: Vec<(usize, usize)>,
}

impl ObservationFile {
    pub fn new(joints: Vec<String>, set: ObservationSet) -> Self {
        Self {
            joints,
            set,
            gaps: Vec::new(),
        }
    }

    pub fn write<W: Write>(&self, out: W) -> Result<(), FormatError> {
        let s = &self.set;
        let meta = ObservationsMeta {
            n_frames: s.n_frames(),
            n_cameras: s.n_cameras(),
            joints: self.joints.clone(),
        };
        let records = (0..s.n_cameras()).flat_map(|c| {
            (0..s.n_frames()).map(move |f| ObservationRecord {
                camera_id: c,
                frame: f,
                joints: s
                    .view(f, c)
                    .iter()
                    .enumerate()
                    .map(|(id, d)| match d {
                        Some(d) => JointRecord {
                            id,
                            x_px: d.pixel.x,
                            y_px: d.pixel.y,
                            confidence: d.confidence,
                            visible: true,
                        },
                        None => JointRecord {
                            id,
                            x_px: 0.0,
                            y_px: 0.0,
                            confidence: 0.0,
                            visible: false,
                        },
                    })
                    .collect(),
            })
        });
        write_jsonl(out, KIND, &meta, records)
    }

    pub fn read<R: Read>(input: R) -> Result<Self, FormatError> {
        let (meta, records): (ObservationsMeta, Vec<(usize, ObservationRecord)>) = read_jsonl(input, KIND)?;
        let nj = meta.joints.len();
        let mut set = ObservationSet::new(meta.n_frames, meta.n_cameras, nj);
        let mut seen = vec![false; meta.n_frames * meta.n_cameras];
        for (line, rec) in records {
            check_index(line, "camera_id", rec.camera_id, meta.n_cameras)?;
            check_index(line, "frame", rec.frame, meta.n_frames)?;
            let slot = rec.camera_id * meta.n_frames + rec.frame;
            if seen[slot] {
                return Err(FormatError::invalid(
                    line,
                    format_args!("duplicate record for camera {} frame {}", rec.camera_id, rec.frame),
                ));
            }
            seen[slot] = true;
            for j in rec.joints {
                check_index(line, "joint id", j.id, nj)?;
                let det = j.visible.then(|| Detection {
                    pixel: Vector2::new(j.x_px, j.y_px),
                    confidence: j.confidence,
                });
                set.set(rec.frame, rec.camera_id, j.id, det)
                    .map_err(|e| FormatError::invalid(line, e))?;
            }
        }
        let gaps = (0..meta.n_cameras)
            .flat_map(|c| (0..meta.n_frames).map(move |f| (c, f)))
            .filter(|&(c, f)| !seen[c * meta.n_frames + f])
            .collect();
        Ok(Self {
            joints: meta.joints,
            set,
            gaps,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), FormatError> {
        self.write(create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self, FormatError> {
        Self::read(open(path)?)
    }
}
