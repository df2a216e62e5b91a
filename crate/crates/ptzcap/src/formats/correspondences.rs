//! Background point correspondences between consecutive frames.
//!
//! A record with frame `f` holds pairs `[x, y, x', y']` mapping pixels of
//! frame `f` to frame `f + 1`.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Vector2;
use ptzcap_core::rotation_from_background::{CorrespondenceSet, PointPair};
use serde::{Deserialize, Serialize};

use super::{check_index, create, open, read_jsonl, write_jsonl};
use crate::error::FormatError;

pub const KIND: &str = "ptzcap-correspondences";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrespondencesMeta {
    /// Video frames; there are `n_frames - 1` frame pairs.
    pub n_frames: usize,
    pub n_cameras: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceRecord {
    pub camera_id: usize,
    pub frame: usize,
    pub points: Vec<[f64; 4]>,
}

pub fn write_correspondences<W: Write>(set: &CorrespondenceSet, out: W) -> Result<(), FormatError> {
    let meta = CorrespondencesMeta {
        n_frames: set.n_frames(),
        n_cameras: set.n_cameras(),
    };
    let pairs = set.n_frames().saturating_sub(1);
    let records = (0..set.n_cameras()).flat_map(|c| {
        (0..pairs).map(move |f| CorrespondenceRecord {
            camera_id: c,
            frame: f,
            points: set.get(c, f).iter().map(|p| [p.src.x, p.src.y, p.dst.x, p.dst.y]).collect(),
        })
    });
    write_jsonl(out, KIND, &meta, records)
}

/// Missing records leave the pair empty, which marks it invalid downstream.
pub fn read_correspondences<R: Read>(input: R) -> Result<CorrespondenceSet, FormatError> {
    let (meta, records): (CorrespondencesMeta, Vec<(usize, CorrespondenceRecord)>) = read_jsonl(input, KIND)?;
    let mut set = CorrespondenceSet::new(meta.n_cameras, meta.n_frames);
    for (line, rec) in records {
        check_index(line, "camera_id", rec.camera_id, meta.n_cameras)?;
        check_index(line, "frame", rec.frame, meta.n_frames.saturating_sub(1))?;
        if rec.points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(FormatError::invalid(line, "non-finite point coordinate"));
        }
        let pts = rec
            .points
            .iter()
            .map(|p| PointPair::new(Vector2::new(p[0], p[1]), Vector2::new(p[2], p[3])))
            .collect();
        set.set(rec.camera_id, rec.frame, pts);
    }
    Ok(set)
}

pub fn save_correspondences(set: &CorrespondenceSet, path: &Path) -> Result<(), FormatError> {
    write_correspondences(set, create(path)?)
}

pub fn load_correspondences(path: &Path) -> Result<CorrespondenceSet, FormatError> {
    read_correspondences(open(path)?)
}
