//! Camera rig: fixed centers, intrinsics and optional rotation tracks.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Vector3;
use ptzcap_core::camera::CameraIntrinsics;
use ptzcap_core::rig::{CameraRig, IntrinsicsTrack, RigCamera};
use serde::{Deserialize, Serialize};

use super::{check_index, check_rotation, create, from_row_major, open, read_jsonl, to_row_major, write_jsonl};
use crate::error::FormatError;

pub const KIND: &str = "ptzcap-cameras";

/// Largest accepted `‖RᵀR − I‖` for rotations read from file.
pub const ROTATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CamerasMeta {
    pub n_frames: usize,
    pub n_cameras: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraRecord {
    pub camera_id: usize,
    /// Camera center in world coordinates, meters.
    pub t: [f64; 3],
    /// Width and height in pixels.
    pub image_size: [f64; 2],
    /// Row-major intrinsics shared by all frames.
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<[f64; 9]>,
    /// Row-major intrinsics per frame, for zooming cameras.
    #[serde(rename = "K_per_frame", default, skip_serializing_if = "Option::is_none")]
    pub k_per_frame: Option<Vec<[f64; 9]>>,
    /// Row-major world-to-camera rotation per frame, when known.
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<[f64; 9]>>,
}

fn record(c: usize, cam: &RigCamera, n_frames: usize) -> CameraRecord {
    let size = |k: &CameraIntrinsics| [k.width(), k.height()];
    let (image_size, k, k_per_frame) = match &cam.intrinsics {
        IntrinsicsTrack::Fixed(k) => (size(k), Some(to_row_major(k.k())), None),
        IntrinsicsTrack::PerFrame(ks) => (
            size(&ks[0]),
            None,
            Some(ks.iter().take(n_frames).map(|k| to_row_major(k.k())).collect()),
        ),
    };
    CameraRecord {
        camera_id: c,
        t: [cam.position.x, cam.position.y, cam.position.z],
        image_size,
        k,
        k_per_frame,
        r: cam.rotations.as_ref().map(|t| t.iter().map(to_row_major).collect()),
    }
}

fn camera(line: usize, rec: CameraRecord, n_frames: usize) -> Result<RigCamera, FormatError> {
    let [w, h] = rec.image_size;
    let intr = |m: &[f64; 9]| CameraIntrinsics::new(from_row_major(m), w, h).map_err(|e| FormatError::invalid(line, e));
    let intrinsics = match (&rec.k, &rec.k_per_frame) {
        (Some(k), None) => IntrinsicsTrack::Fixed(intr(k)?),
        (None, Some(ks)) => {
            if ks.len() != n_frames {
                return Err(FormatError::invalid(
                    line,
                    format_args!("K_per_frame has {} entries, expected {n_frames}", ks.len()),
                ));
            }
            IntrinsicsTrack::PerFrame(ks.iter().map(intr).collect::<Result<_, _>>()?)
        }
        (None, None) => return Err(FormatError::invalid(line, "missing intrinsics (K or K_per_frame)")),
        (Some(_), Some(_)) => return Err(FormatError::invalid(line, "give either K or K_per_frame, not both")),
    };
    if !rec.t.iter().all(|v| v.is_finite()) {
        return Err(FormatError::invalid(line, "non-finite camera position"));
    }
    let mut cam = RigCamera::new(Vector3::from(rec.t), intrinsics);
    if let Some(rs) = &rec.r {
        if rs.len() != n_frames {
            return Err(FormatError::invalid(
                line,
                format_args!("R track has {} entries, expected {n_frames}", rs.len()),
            ));
        }
        let track: Vec<_> = rs.iter().map(from_row_major).collect();
        if let Some(f) = track.iter().position(|r| !check_rotation(r, ROTATION_TOLERANCE)) {
            return Err(FormatError::invalid(line, format_args!("R at frame {f} is not a rotation")));
        }
        cam = cam.with_rotations(track);
    }
    Ok(cam)
}

pub fn write_rig<W: Write>(rig: &CameraRig, out: W) -> Result<(), FormatError> {
    let meta = CamerasMeta {
        n_frames: rig.n_frames(),
        n_cameras: rig.n_cameras(),
    };
    let records = rig.cameras().iter().enumerate().map(|(c, cam)| record(c, cam, rig.n_frames()));
    write_jsonl(out, KIND, &meta, records)
}

pub fn read_rig<R: Read>(input: R) -> Result<CameraRig, FormatError> {
    let (meta, records): (CamerasMeta, Vec<(usize, CameraRecord)>) = read_jsonl(input, KIND)?;
    let mut slots: Vec<Option<RigCamera>> = vec![None; meta.n_cameras];
    for (line, rec) in records {
        check_index(line, "camera_id", rec.camera_id, meta.n_cameras)?;
        let c = rec.camera_id;
        if slots[c].is_some() {
            return Err(FormatError::invalid(line, format_args!("duplicate camera {c}")));
        }
        slots[c] = Some(camera(line, rec, meta.n_frames)?);
    }
    let cameras = slots
        .into_iter()
        .enumerate()
        .map(|(c, s)| s.ok_or_else(|| FormatError::invalid(0, format_args!("camera {c} is missing"))))
        .collect::<Result<Vec<_>, _>>()?;
    CameraRig::new(meta.n_frames, cameras).map_err(|e| FormatError::invalid(0, e))
}

pub fn save_rig(rig: &CameraRig, path: &Path) -> Result<(), FormatError> {
    write_rig(rig, create(path)?)
}

pub fn load_rig(path: &Path) -> Result<CameraRig, FormatError> {
    read_rig(open(path)?)
}
