//! Line-delimited JSON files.
//!
//! Every file starts with a header object naming the format and its
//! version, followed by one record per line. Floats are written in shortest
//! round-trip form, so reading a file back reproduces every value exactly.

pub mod cameras;
pub mod correspondences;
pub mod deltas;
pub mod observations;
pub mod trajectory;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Matrix3;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::FormatError;

/// Schema version written into every header.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header<M> {
    format: String,
    version: u32,
    #[serde(flatten)]
    meta: M,
}

pub(crate) fn write_jsonl<W, M, R, I>(out: W, kind: &str, meta: &M, records: I) -> Result<(), FormatError>
where
    W: Write,
    M: Serialize,
    R: Serialize,
    I: IntoIterator<Item = R>,
{
    let mut out = BufWriter::new(out);
    let header = Header {
        format: kind.to_owned(),
        version: FORMAT_VERSION,
        meta,
    };
    serde_json::to_writer(&mut out, &header).map_err(FormatError::json(0))?;
    out.write_all(b"\n")?;
    for r in records {
        serde_json::to_writer(&mut out, &r).map_err(FormatError::json(0))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Parsed header metadata and `(line number, record)` pairs.
pub(crate) type Parsed<M, R> = (M, Vec<(usize, R)>);

pub(crate) fn read_jsonl<Rd, M, R>(input: Rd, kind: &str) -> Result<Parsed<M, R>, FormatError>
where
    Rd: Read,
    M: DeserializeOwned,
    R: DeserializeOwned,
{
    let mut lines = BufReader::new(input)
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let (line, text) = lines.next().ok_or(FormatError::MissingHeader)?;
    let text = text?;
    let header: Header<serde_json::Value> = serde_json::from_str(&text).map_err(FormatError::json(line))?;
    if header.format != kind {
        return Err(FormatError::WrongFormat {
            expected: kind.to_owned(),
            found: header.format,
        });
    }
    if header.version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion(header.version));
    }
    let meta = serde_json::from_value(header.meta).map_err(FormatError::json(line))?;
    let mut records = Vec::new();
    for (line, text) in lines {
        let text = text?;
        records.push((line, serde_json::from_str(&text).map_err(FormatError::json(line))?));
    }
    Ok((meta, records))
}

pub(crate) fn create(path: &Path) -> Result<File, FormatError> {
    File::create(path).map_err(|e| FormatError::Open {
        path: path.display().to_string(),
        source: e,
    })
}

pub(crate) fn open(path: &Path) -> Result<File, FormatError> {
    File::open(path).map_err(|e| FormatError::Open {
        path: path.display().to_string(),
        source: e,
    })
}

/// Row-major 9-vector of a 3x3 matrix.
pub fn to_row_major(m: &Matrix3<f64>) -> [f64; 9] {
    let mut out = [0.0; 9];
    for r in 0..3 {
        for c in 0..3 {
            out[r * 3 + c] = m[(r, c)];
        }
    }
    out
}

pub fn from_row_major(v: &[f64; 9]) -> Matrix3<f64> {
    Matrix3::from_row_slice(v)
}

/// Rejects matrices that are not rotations within `tol` (Frobenius norm of
/// `RᵀR − I`, plus a positive determinant).
pub(crate) fn check_rotation(r: &Matrix3<f64>, tol: f64) -> bool {
    (r.transpose() * r - Matrix3::identity()).norm() <= tol && r.determinant() > 0.0
}

pub(crate) fn check_index(line: usize, what: &'static str, value: usize, bound: usize) -> Result<(), FormatError> {
    if value < bound {
        Ok(())
    } else {
        Err(FormatError::Invalid {
            line,
            msg: format!("{what} {value} is out of range (< {bound})"),
        })
    }
}
