//! Inter-frame camera rotations from static-background correspondences.
//!
//! For a camera that only rotates about its center, background points in
//! consecutive frames are related by `H = K1 * dR * K0^-1`. The homography is
//! fitted with a normalized DLT inside RANSAC, `dR` is recovered by undoing
//! the intrinsics and refined on the inliers, and the resulting Euler angle
//! sequences are cleaned with a median filter followed by Gaussian
//! smoothing.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, Matrix2x3, Matrix3, Vector2, Vector3};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::camera::{axis_angle, euler_to_matrix, matrix_to_euler, CameraIntrinsics, EulerAngles};
use crate::rig::{nearest_rotation, CameraRig};
use crate::signal::{gaussian_smooth, median_filter};

/// Relative tolerance on the second-smallest DLT singular value below which
/// the point configuration is treated as degenerate.
const DEGENERACY_TOLERANCE: f64 = 1e-9;

pub const DEFAULT_RANSAC_SEED: u64 = 0x5eed;
pub const MEDIAN_WINDOW: usize = 7;
pub const SMOOTHING_SIGMA: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum HomographyError {
    #[error("need at least 4 correspondences, got {0}")]
    TooFewPoints(usize),
    #[error("degenerate point configuration")]
    Degenerate,
    #[error("no consensus: best model supports {inliers} of {total} correspondences")]
    NoConsensus { inliers: usize, total: usize },
    #[error("non-finite correspondence")]
    NonFinite,
    #[error("intrinsics are not invertible")]
    SingularIntrinsics,
}

/// A background point seen at `src` in frame `f` and at `dst` in frame `f + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointPair {
    pub src: Vector2<f64>,
    pub dst: Vector2<f64>,
}

impl PointPair {
    pub fn new(src: Vector2<f64>, dst: Vector2<f64>) -> Self {
        Self { src, dst }
    }
}

/// Correspondences per camera and consecutive frame pair: `pairs[c][f]`
/// relates frame `f` to frame `f + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceSet {
    n_frames: usize,
    pairs: Vec<Vec<Vec<PointPair>>>,
}

impl CorrespondenceSet {
    pub fn new(n_cameras: usize, n_frames: usize) -> Self {
        let n_pairs = n_frames.saturating_sub(1);
        Self {
            n_frames,
            pairs: vec![vec![Vec::new(); n_pairs]; n_cameras],
        }
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_cameras(&self) -> usize {
        self.pairs.len()
    }

    pub fn get(&self, camera: usize, frame: usize) -> &[PointPair] {
        &self.pairs[camera][frame]
    }

    pub fn set(&mut self, camera: usize, frame: usize, points: Vec<PointPair>) {
        self.pairs[camera][frame] = points;
    }

    pub fn push(&mut self, camera: usize, frame: usize, pair: PointPair) {
        self.pairs[camera][frame].push(pair);
    }

    pub fn select_cameras(&self, cameras: &[usize]) -> Self {
        Self {
            n_frames: self.n_frames,
            pairs: cameras.iter().map(|&c| self.pairs[c].clone()).collect(),
        }
    }
}

/// One measured inter-frame rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaEntry {
    /// `R[f + 1] * R[f]^T` in world-to-camera convention.
    pub rotation: Matrix3<f64>,
    pub valid: bool,
    /// Filled in from neighbouring valid entries during filtering.
    pub interpolated: bool,
}

impl DeltaEntry {
    pub fn valid(rotation: Matrix3<f64>) -> Self {
        Self {
            rotation,
            valid: true,
            interpolated: false,
        }
    }

    pub fn invalid() -> Self {
        Self {
            rotation: Matrix3::identity(),
            valid: false,
            interpolated: false,
        }
    }
}

/// Measured rotation deltas, `cameras[c][f]` for frame pairs `(f, f + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationDeltas {
    pub cameras: Vec<Vec<DeltaEntry>>,
}

impl RotationDeltas {
    pub fn new(cameras: Vec<Vec<DeltaEntry>>) -> Self {
        Self { cameras }
    }

    /// Exact deltas of known rotation tracks.
    pub fn from_tracks(tracks: &[Vec<Matrix3<f64>>]) -> Self {
        Self::new(
            tracks
                .iter()
                .map(|t| {
                    t.windows(2)
                        .map(|w| DeltaEntry::valid(w[1] * w[0].transpose()))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn n_cameras(&self) -> usize {
        self.cameras.len()
    }

    pub fn invalid_fraction(&self, camera: usize) -> f64 {
        let entries = &self.cameras[camera];
        if entries.is_empty() {
            return 0.0;
        }
        entries.iter().filter(|e| !e.valid).count() as f64 / entries.len() as f64
    }

    pub fn valid_count(&self) -> usize {
        self.cameras.iter().flatten().filter(|e| e.valid).count()
    }

    pub fn select_cameras(&self, cameras: &[usize]) -> Self {
        Self::new(cameras.iter().map(|&c| self.cameras[c].clone()).collect())
    }

    /// Integrates the deltas of one camera starting from `start`. Invalid
    /// entries are applied as stored.
    pub fn integrate(&self, camera: usize, start: Matrix3<f64>) -> Vec<Matrix3<f64>> {
        let mut out = Vec::with_capacity(self.cameras[camera].len() + 1);
        out.push(start);
        let mut r = start;
        for e in &self.cameras[camera] {
            r = e.rotation * r;
            out.push(r);
        }
        out
    }
}

/// Hartley normalization: translate to the centroid, scale to mean
/// distance sqrt(2).
fn normalizing_transform(points: impl Iterator<Item = Vector2<f64>> + Clone) -> Matrix3<f64> {
    let n = points.clone().count() as f64;
    let centroid = points.clone().fold(Vector2::zeros(), |a, p| a + p) / n;
    let mean_dist = points.map(|p| (p - centroid).norm()).sum::<f64>() / n;
    let s = if mean_dist > 0.0 {
        core::f64::consts::SQRT_2 / mean_dist
    } else {
        1.0
    };
    Matrix3::new(s, 0.0, -s * centroid.x, 0.0, s, -s * centroid.y, 0.0, 0.0, 1.0)
}

fn apply(h: &Matrix3<f64>, p: &Vector2<f64>) -> Vector2<f64> {
    let q = h * Vector3::new(p.x, p.y, 1.0);
    Vector2::new(q.x / q.z, q.y / q.z)
}

fn scale_normalize(h: Matrix3<f64>) -> Matrix3<f64> {
    if h[(2, 2)].abs() > 1e-12 * h.norm() {
        h / h[(2, 2)]
    } else {
        h / h.norm()
    }
}

/// Normalized DLT homography mapping `src` to `dst`, scaled so that
/// `H[2][2] = 1` when that entry is not (numerically) zero.
pub fn fit_homography_dlt(pairs: &[PointPair]) -> Result<Matrix3<f64>, HomographyError> {
    let n = pairs.len();
    if n < 4 {
        return Err(HomographyError::TooFewPoints(n));
    }
    if pairs
        .iter()
        .any(|p| !(p.src.iter().chain(p.dst.iter()).all(|v| v.is_finite())))
    {
        return Err(HomographyError::NonFinite);
    }
    let t_src = normalizing_transform(pairs.iter().map(|p| p.src));
    let t_dst = normalizing_transform(pairs.iter().map(|p| p.dst));

    // Pad to a square system so the SVD always yields the full right basis.
    let rows = (2 * n).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, p) in pairs.iter().enumerate() {
        let s = apply(&t_src, &p.src);
        let d = apply(&t_dst, &p.dst);
        let (x, y, u, v) = (s.x, s.y, d.x, d.y);
        let r0 = [-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u];
        let r1 = [0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v];
        for k in 0..9 {
            a[(2 * i, k)] = r0[k];
            a[(2 * i + 1, k)] = r1[k];
        }
    }
    let svd = a.svd(false, true);
    let sv = &svd.singular_values;
    if !(sv[7] > DEGENERACY_TOLERANCE * sv[0]) {
        return Err(HomographyError::Degenerate);
    }
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let h = v_t.row(8);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let t_dst_inv = t_dst.try_inverse().ok_or(HomographyError::Degenerate)?;
    let full = t_dst_inv * hn * t_src;
    if !full.iter().all(|v| v.is_finite()) {
        return Err(HomographyError::Degenerate);
    }
    Ok(scale_normalize(full))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig {
    /// Maximum forward transfer error of an inlier, in pixels.
    pub threshold_px: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Stop early once this confidence of having drawn an all-inlier sample
    /// is reached. Values outside (0, 1) disable early stopping.
    pub confidence: f64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            threshold_px: 3.0,
            max_iters: 2000,
            seed: DEFAULT_RANSAC_SEED,
            confidence: 0.9999,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacFit {
    pub homography: Matrix3<f64>,
    pub inliers: Vec<bool>,
    pub iterations: usize,
}

impl RansacFit {
    pub fn inlier_count(&self) -> usize {
        self.inliers.iter().filter(|&&b| b).count()
    }
}

fn transfer_error(h: &Matrix3<f64>, p: &PointPair) -> f64 {
    let q = h * Vector3::new(p.src.x, p.src.y, 1.0);
    if q.z.abs() < 1e-12 {
        return f64::INFINITY;
    }
    (Vector2::new(q.x / q.z, q.y / q.z) - p.dst).norm()
}

fn inlier_mask(h: &Matrix3<f64>, pairs: &[PointPair], threshold: f64) -> Vec<bool> {
    pairs.iter().map(|p| transfer_error(h, p) <= threshold).collect()
}

fn collinear(a: &Vector2<f64>, b: &Vector2<f64>, c: &Vector2<f64>) -> bool {
    let (u, v) = (b - a, c - a);
    let cross = u.x * v.y - u.y * v.x;
    cross.abs() <= 1e-9 * (u.norm() * v.norm()).max(1e-300)
}

fn sample_is_degenerate(s: &[PointPair; 4]) -> bool {
    const TRIPLES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    TRIPLES.iter().any(|t| {
        collinear(&s[t[0]].src, &s[t[1]].src, &s[t[2]].src)
            || collinear(&s[t[0]].dst, &s[t[1]].dst, &s[t[2]].dst)
    })
}

/// RANSAC over minimal 4-point samples, followed by a DLT refit on the
/// largest consensus set. `stream` selects an independent RNG stream so
/// that separate fits sharing `cfg.seed` do not share random draws.
pub fn fit_homography_ransac(
    pairs: &[PointPair],
    cfg: &RansacConfig,
    stream: u64,
) -> Result<RansacFit, HomographyError> {
    let n = pairs.len();
    if n < 4 {
        return Err(HomographyError::TooFewPoints(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);

    let mut best: Option<(usize, Matrix3<f64>)> = None;
    let mut required = cfg.max_iters;
    let mut iterations = 0;
    while iterations < cfg.max_iters.min(required) {
        iterations += 1;
        let idx = index::sample(&mut rng, n, 4);
        let sample = [pairs[idx.index(0)], pairs[idx.index(1)], pairs[idx.index(2)], pairs[idx.index(3)]];
        if sample_is_degenerate(&sample) {
            continue;
        }
        let Ok(h) = fit_homography_dlt(&sample) else {
            continue;
        };
        let count = pairs
            .iter()
            .filter(|p| transfer_error(&h, p) <= cfg.threshold_px)
            .count();
        if best.map_or(true, |(c, _)| count > c) {
            best = Some((count, h));
            if cfg.confidence > 0.0 && cfg.confidence < 1.0 {
                let w = count as f64 / n as f64;
                let p_fail = 1.0 - w.powi(4);
                required = if p_fail <= 0.0 {
                    0
                } else {
                    let k = (1.0 - cfg.confidence).ln() / p_fail.ln();
                    if k.is_finite() { k.ceil() as usize } else { cfg.max_iters }
                };
            }
        }
    }

    // A minimal sample always supports itself, so require more than that
    // whenever enough points exist.
    let needed = n.min(8);
    let (count, h_best) = match best {
        Some((c, h)) if c >= needed => (c, h),
        Some((c, _)) => return Err(HomographyError::NoConsensus { inliers: c, total: n }),
        None => return Err(HomographyError::NoConsensus { inliers: 0, total: n }),
    };
    let _ = count;
    let mask = inlier_mask(&h_best, pairs, cfg.threshold_px);
    let inlier_pairs: Vec<PointPair> = pairs
        .iter()
        .zip(&mask)
        .filter_map(|(p, &m)| m.then_some(*p))
        .collect();
    let (homography, inliers) = match fit_homography_dlt(&inlier_pairs) {
        Ok(h) => {
            let refit_mask = inlier_mask(&h, pairs, cfg.threshold_px);
            if refit_mask.iter().filter(|&&b| b).count() >= inlier_pairs.len() {
                (h, refit_mask)
            } else {
                (h, mask)
            }
        }
        Err(_) => (h_best, mask),
    };
    Ok(RansacFit {
        homography,
        inliers,
        iterations,
    })
}

/// Raw and projected rotation recovered from a pure-rotation homography.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationExtraction {
    /// `K1^-1 H K0` rescaled to unit determinant.
    pub raw: Matrix3<f64>,
    /// Nearest rotation to `raw`.
    pub rotation: Matrix3<f64>,
}

pub fn extract_rotation_delta(
    h: &Matrix3<f64>,
    k_f: &Matrix3<f64>,
    k_f1: &Matrix3<f64>,
) -> Result<RotationExtraction, HomographyError> {
    let k1_inv = k_f1
        .try_inverse()
        .ok_or(HomographyError::SingularIntrinsics)?;
    if k_f.determinant().abs() < 1e-300 {
        return Err(HomographyError::SingularIntrinsics);
    }
    let m = k1_inv * h * k_f;
    let det = m.determinant();
    if !(det.abs() > 0.0) || !det.is_finite() {
        return Err(HomographyError::Degenerate);
    }
    let raw = m / det.cbrt();
    Ok(RotationExtraction {
        raw,
        rotation: nearest_rotation(&raw),
    })
}

/// Gauss-Newton iterations of [`refine_rotation`].
pub const REFINE_ITERS: usize = 10;

/// Rotation minimizing the squared transfer error of `pairs` under the
/// pure-rotation model `x1 ~ K1 * R * K0^-1 * x0`, starting from `initial`.
///
/// The homography fit leaves the perspective entries of `H` poorly
/// determined for long focal lengths, and projecting `K1^-1 H K0` onto the
/// rotations spreads that error into pan and tilt. Fitting the three
/// rotation parameters directly does not.
pub fn refine_rotation(
    pairs: &[PointPair],
    k_f: &Matrix3<f64>,
    k_f1: &Matrix3<f64>,
    initial: &Matrix3<f64>,
) -> Result<Matrix3<f64>, HomographyError> {
    let k0_inv = k_f.try_inverse().ok_or(HomographyError::SingularIntrinsics)?;
    let rays: Vec<Vector3<f64>> = pairs.iter().map(|p| k0_inv * Vector3::new(p.src.x, p.src.y, 1.0)).collect();
    let mut r = *initial;
    for _ in 0..REFINE_ITERS {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for (ray, p) in rays.iter().zip(pairs) {
            let v = r * ray;
            let q = k_f1 * v;
            if !(q.z > 0.0) {
                continue;
            }
            let u = Vector2::new(q.x / q.z, q.y / q.z);
            let res = u - p.dst;
            // d(R v) / d(omega) for R <- exp([omega]x) R is -[v]x.
            let dq = k_f1 * (-v.cross_matrix());
            let mut j = Matrix2x3::zeros();
            for col in 0..3 {
                j[(0, col)] = (dq[(0, col)] - u.x * dq[(2, col)]) / q.z;
                j[(1, col)] = (dq[(1, col)] - u.y * dq[(2, col)]) / q.z;
            }
            jtj += j.transpose() * j;
            jtr += j.transpose() * res;
        }
        let Some(step) = jtj.cholesky().map(|c| c.solve(&(-jtr))) else {
            return Err(HomographyError::Degenerate);
        };
        let angle = step.norm();
        if angle > 0.0 {
            r = axis_angle(&step, angle) * r;
        }
        if angle < 1e-15 {
            break;
        }
    }
    Ok(nearest_rotation(&r))
}

/// One frame pair through RANSAC, extraction and refinement on the inliers.
pub fn estimate_pair_rotation(
    pairs: &[PointPair],
    k_f: &Matrix3<f64>,
    k_f1: &Matrix3<f64>,
    cfg: &RansacConfig,
    stream: u64,
) -> Result<(RansacFit, Matrix3<f64>), HomographyError> {
    let fit = fit_homography_ransac(pairs, cfg, stream)?;
    let ex = extract_rotation_delta(&fit.homography, k_f, k_f1)?;
    let inliers: Vec<PointPair> = pairs
        .iter()
        .zip(&fit.inliers)
        .filter(|(_, &keep)| keep)
        .map(|(p, _)| *p)
        .collect();
    let r = refine_rotation(&inliers, k_f, k_f1, &ex.rotation)?;
    Ok((fit, r))
}

/// Fills invalid samples by linear interpolation between the nearest valid
/// neighbours, holding the end values outside the valid range.
fn interpolate_gaps(values: &mut [f64], valid: &[bool]) {
    let known: Vec<usize> = (0..values.len()).filter(|&i| valid[i]).collect();
    let (Some(&first), Some(&last)) = (known.first(), known.last()) else {
        return;
    };
    for i in 0..first {
        values[i] = values[first];
    }
    for i in last + 1..values.len() {
        values[i] = values[last];
    }
    for w in known.windows(2) {
        let (a, b) = (w[0], w[1]);
        for i in a + 1..b {
            let t = (i - a) as f64 / (b - a) as f64;
            values[i] = values[a] + t * (values[b] - values[a]);
        }
    }
}

/// Median then Gaussian filtering of each camera's Euler-angle delta
/// sequence. Invalid entries are interpolated first and stay flagged
/// invalid. Cameras without any valid entry are returned unchanged.
pub fn filter_rotation_track(deltas: &RotationDeltas) -> RotationDeltas {
    let cameras = deltas
        .cameras
        .iter()
        .map(|entries| {
            let valid: Vec<bool> = entries.iter().map(|e| e.valid).collect();
            if !valid.iter().any(|&v| v) {
                return entries.clone();
            }
            let angles: Vec<[f64; 3]> = entries
                .iter()
                .map(|e| matrix_to_euler(&e.rotation).angles.to_array())
                .collect();
            let mut filtered = vec![[0.0; 3]; entries.len()];
            for axis in 0..3 {
                let mut series: Vec<f64> = angles.iter().map(|a| a[axis]).collect();
                interpolate_gaps(&mut series, &valid);
                let smooth = gaussian_smooth(&median_filter(&series, MEDIAN_WINDOW), SMOOTHING_SIGMA);
                for (out, v) in filtered.iter_mut().zip(smooth) {
                    out[axis] = v;
                }
            }
            entries
                .iter()
                .zip(filtered)
                .map(|(e, a)| DeltaEntry {
                    rotation: euler_to_matrix(EulerAngles::from_array(a)),
                    valid: e.valid,
                    interpolated: !e.valid,
                })
                .collect()
        })
        .collect();
    RotationDeltas { cameras }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairStatus {
    Ok,
    Failed(HomographyError),
}

/// Outcome of one (camera, frame pair) fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairReport {
    pub camera: usize,
    pub frame: usize,
    pub n_points: usize,
    pub n_inliers: usize,
    pub status: PairStatus,
}

impl PairReport {
    pub fn inlier_ratio(&self) -> f64 {
        if self.n_points == 0 {
            0.0
        } else {
            self.n_inliers as f64 / self.n_points as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationEstimate {
    /// Per-pair deltas before filtering.
    pub raw: RotationDeltas,
    /// Deltas after filtering, or a copy of `raw` when filtering is off.
    pub deltas: RotationDeltas,
    pub reports: Vec<PairReport>,
}

/// RNG stream for one (camera, frame pair) fit.
pub fn pair_stream(camera: usize, frame: usize) -> u64 {
    ((camera as u64) << 32) | frame as u64
}

fn intrinsics_matrix(rig: &CameraRig, camera: usize, frame: usize) -> Matrix3<f64> {
    *CameraIntrinsics::k(rig.camera(camera).intrinsics_at(frame))
}

/// Runs [`estimate_pair_rotation`] and (optionally) filtering for every camera and
/// frame pair. Failed pairs are marked invalid and reported.
pub fn estimate_rotation_deltas(
    corr: &CorrespondenceSet,
    rig: &CameraRig,
    cfg: &RansacConfig,
    filter: bool,
) -> RotationEstimate {
    let n_pairs = corr.n_frames().saturating_sub(1);
    let mut reports = Vec::with_capacity(corr.n_cameras() * n_pairs);
    let mut cameras = Vec::with_capacity(corr.n_cameras());
    for c in 0..corr.n_cameras() {
        let mut entries = Vec::with_capacity(n_pairs);
        for f in 0..n_pairs {
            let pts = corr.get(c, f);
            let outcome = estimate_pair_rotation(
                pts,
                &intrinsics_matrix(rig, c, f),
                &intrinsics_matrix(rig, c, f + 1),
                cfg,
                pair_stream(c, f),
            )
            .map(|(fit, r)| (fit.inlier_count(), r));
            let (entry, n_inliers, status) = match outcome {
                Ok((k, r)) => (DeltaEntry::valid(r), k, PairStatus::Ok),
                Err(e) => (DeltaEntry::invalid(), 0, PairStatus::Failed(e)),
            };
            entries.push(entry);
            reports.push(PairReport {
                camera: c,
                frame: f,
                n_points: pts.len(),
                n_inliers,
                status,
            });
        }
        cameras.push(entries);
    }
    let raw = RotationDeltas::new(cameras);
    let deltas = if filter {
        filter_rotation_track(&raw)
    } else {
        raw.clone()
    };
    RotationEstimate {
        raw,
        deltas,
        reports,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_pairs(h: &Matrix3<f64>) -> Vec<PointPair> {
        [(100.0, 80.0), (900.0, 120.0), (850.0, 700.0), (150.0, 650.0), (500.0, 400.0), (300.0, 200.0), (700.0, 500.0), (420.0, 610.0)]
            .iter()
            .map(|&(x, y)| {
                let s = Vector2::new(x, y);
                PointPair::new(s, apply(h, &s))
            })
            .collect()
    }

    #[test]
    fn identity_pairs_give_identity() {
        let h = fit_homography_dlt(&grid_pairs(&Matrix3::identity())).unwrap();
        assert!((h - Matrix3::identity()).norm() < 1e-10);
    }

    #[test]
    fn recovers_generating_homography() {
        let h0 = Matrix3::new(1.02, 0.03, -12.0, -0.01, 0.98, 7.5, 1e-5, -2e-5, 1.0);
        let h = fit_homography_dlt(&grid_pairs(&h0)).unwrap();
        assert!((h - h0).norm() / h0.norm() < 1e-8);
    }

    #[test]
    fn minimal_four_points_are_exact() {
        let h0 = Matrix3::new(0.9, -0.05, 30.0, 0.04, 1.1, -20.0, 2e-5, 1e-5, 1.0);
        let pairs = &grid_pairs(&h0)[..4];
        let h = fit_homography_dlt(pairs).unwrap();
        assert!((h - h0).norm() / h0.norm() < 1e-8);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let pairs: Vec<_> = (0..4)
            .map(|i| {
                let p = Vector2::new(10.0 * i as f64, 5.0 * i as f64);
                PointPair::new(p, p)
            })
            .collect();
        assert_eq!(fit_homography_dlt(&pairs), Err(HomographyError::Degenerate));
        assert_eq!(fit_homography_dlt(&pairs[..3]), Err(HomographyError::TooFewPoints(3)));
    }

    #[test]
    fn rotation_round_trip_through_homography() {
        let k = Matrix3::new(5000.0, 0.0, 960.0, 0.0, 5000.0, 540.0, 0.0, 0.0, 1.0);
        let dr = axis_angle(&Vector3::new(0.2, 1.0, -0.1), 0.01);
        let h = k * dr * k.try_inverse().unwrap();
        let ex = extract_rotation_delta(&h, &k, &k).unwrap();
        assert!((ex.rotation - dr).norm() < 1e-12);
        let ex = extract_rotation_delta(&(-3.0 * h), &k, &k).unwrap();
        assert!((ex.rotation - dr).norm() < 1e-12);
    }

    #[test]
    fn interpolation_fills_gaps_linearly() {
        let mut v = [0.0, 9.0, 9.0, 3.0, 9.0];
        interpolate_gaps(&mut v, &[true, false, false, true, false]);
        assert_eq!(v, [0.0, 1.0, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn filtering_keeps_constant_deltas_and_marks_gaps() {
        let r = euler_to_matrix(EulerAngles::new(0.01, -0.002, 0.0005));
        let mut entries = vec![DeltaEntry::valid(r); 12];
        entries[4] = DeltaEntry::invalid();
        let out = filter_rotation_track(&RotationDeltas::new(vec![entries]));
        for (i, e) in out.cameras[0].iter().enumerate() {
            assert!((e.rotation - r).norm() < 1e-14);
            assert_eq!(e.valid, i != 4);
            assert_eq!(e.interpolated, i == 4);
        }
    }
}
