//! Metric summaries (JSON) and plot-ready per-frame series (CSV).

use std::io::Write;

use ptzcap_core::energy::EnergyTerms;
use ptzcap_core::metrics::{Evaluation, PckResult};
use serde::Serialize;

use crate::error::FormatError;

pub const METRICS_KIND: &str = "ptzcap-metrics";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSummary {
    /// `null` when no frame defines the metric.
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub unit: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PckSummary {
    /// Radius as a multiple of the ground-truth head-neck distance.
    pub multiplier: f64,
    pub percentage: Option<f64>,
    pub counted: usize,
    pub skipped_frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsDocument {
    pub format: &'static str,
    pub version: u32,
    pub metrics: serde_json::Map<String, serde_json::Value>,
    pub pck: PckSummary,
    /// Frames where the normalized MPJPE fell back to scale 1.
    pub unit_scale_frames: Vec<usize>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl MetricsDocument {
    pub fn new(eval: &Evaluation, pck: &PckResult, multiplier: f64) -> Self {
        let metrics = eval
            .entries
            .iter()
            .map(|(key, r)| {
                let s = MetricSummary {
                    mean: finite(r.mean),
                    std: finite(r.std),
                    unit: r.unit.symbol(),
                };
                ((*key).to_owned(), serde_json::to_value(s).expect("plain struct"))
            })
            .collect();
        let mut unit_scale_frames = eval.unit_scale_frames.clone();
        unit_scale_frames.sort_unstable();
        unit_scale_frames.dedup();
        Self {
            format: METRICS_KIND,
            version: crate::formats::FORMAT_VERSION,
            metrics,
            pck: PckSummary {
                multiplier,
                percentage: finite(pck.percentage),
                counted: pck.counted,
                skipped_frames: pck.skipped_frames,
            },
            unit_scale_frames,
        }
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<(), FormatError> {
        serde_json::to_writer_pretty(&mut out, self).map_err(FormatError::json(0))?;
        out.write_all(b"\n")?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> FormatError {
    FormatError::Io(std::io::Error::other(e))
}

fn cell(v: Option<&f64>) -> String {
    match v {
        Some(x) if x.is_finite() => x.to_string(),
        _ => String::new(),
    }
}

/// One row per frame and one column per metric. Undefined values are empty.
pub fn write_metric_series<W: Write>(eval: &Evaluation, n_frames: usize, out: W) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![String::from("frame")];
    header.extend(eval.entries.iter().map(|(k, r)| format!("{k} [{}]", r.unit.symbol())));
    w.write_record(&header).map_err(csv_error)?;
    for f in 0..n_frames {
        let mut row = vec![f.to_string()];
        row.extend(eval.entries.iter().map(|(_, r)| cell(r.series.get(f))));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Energy terms per outer iteration; row 0 is the starting point.
pub fn write_energy_history<W: Write>(history: &[EnergyTerms], out: W) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "total", "e_rep", "e_limbs", "e_rot"])
        .map_err(csv_error)?;
    for (i, e) in history.iter().enumerate() {
        w.write_record([
            i.to_string(),
            e.total.to_string(),
            e.e_rep.to_string(),
            e.e_limbs.to_string(),
            e.e_rot.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
