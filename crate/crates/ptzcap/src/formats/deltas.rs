//! Inter-frame rotation deltas, `R[f + 1] · R[f]ᵀ` per camera.

use std::io::{Read, Write};
use std::path::Path;

use ptzcap_core::rotation_from_background::{DeltaEntry, RotationDeltas};
use serde::{Deserialize, Serialize};

use super::{check_index, check_rotation, create, from_row_major, open, read_jsonl, to_row_major, write_jsonl};
use super::cameras::ROTATION_TOLERANCE;
use crate::error::FormatError;

pub const KIND: &str = "ptzcap-deltas";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltasMeta {
    pub n_frames: usize,
    pub n_cameras: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRecord {
    pub camera_id: usize,
    pub frame: usize,
    #[serde(rename = "R")]
    pub r: [f64; 9],
    pub valid: bool,
    /// Filled in from neighboring pairs by the filter.
    #[serde(default)]
    pub interpolated: bool,
}

pub fn write_deltas<W: Write>(deltas: &RotationDeltas, out: W) -> Result<(), FormatError> {
    let pairs = deltas.cameras.first().map_or(0, |c| c.len());
    let meta = DeltasMeta {
        n_frames: pairs + 1,
        n_cameras: deltas.n_cameras(),
    };
    let records = deltas.cameras.iter().enumerate().flat_map(|(c, entries)| {
        entries.iter().enumerate().map(move |(f, e)| DeltaRecord {
            camera_id: c,
            frame: f,
            r: to_row_major(&e.rotation),
            valid: e.valid,
            interpolated: e.interpolated,
        })
    });
    write_jsonl(out, KIND, &meta, records)
}

/// Pairs without a record are invalid.
pub fn read_deltas<R: Read>(input: R) -> Result<RotationDeltas, FormatError> {
    let (meta, records): (DeltasMeta, Vec<(usize, DeltaRecord)>) = read_jsonl(input, KIND)?;
    let pairs = meta.n_frames.saturating_sub(1);
    let mut cameras = vec![vec![DeltaEntry::invalid(); pairs]; meta.n_cameras];
    let mut seen = vec![vec![false; pairs]; meta.n_cameras];
    for (line, rec) in records {
        check_index(line, "camera_id", rec.camera_id, meta.n_cameras)?;
        check_index(line, "frame", rec.frame, pairs)?;
        if std::mem::replace(&mut seen[rec.camera_id][rec.frame], true) {
            return Err(FormatError::invalid(
                line,
                format_args!("duplicate record for camera {} frame {}", rec.camera_id, rec.frame),
            ));
        }
        if rec.r.iter().any(|v| !v.is_finite()) {
            return Err(FormatError::invalid(line, "non-finite rotation"));
        }
        let rotation = from_row_major(&rec.r);
        if rec.valid && !check_rotation(&rotation, ROTATION_TOLERANCE) {
            return Err(FormatError::invalid(line, "R is not a rotation"));
        }
        cameras[rec.camera_id][rec.frame] = DeltaEntry {
            rotation,
            valid: rec.valid,
            interpolated: rec.interpolated,
        };
    }
    Ok(RotationDeltas::new(cameras))
}

pub fn save_deltas(deltas: &RotationDeltas, path: &Path) -> Result<(), FormatError> {
    write_deltas(deltas, create(path)?)
}

pub fn load_deltas(path: &Path) -> Result<RotationDeltas, FormatError> {
    read_deltas(open(path)?)
}
