//! Truncated cosine (DCT-III) trajectory basis.
//!
//! A scalar trajectory over `n_frames` samples is synthesized from
//! `n_basis` coefficients as
//!
//! ```text
//! x[f] = c[0] / 2 + sum_{n=1}^{n_basis-1} c[n] * cos(pi * n * (f + 1/2) / period)
//! ```
//!
//! with `period = n_frames` unless chosen explicitly. Multi-channel data is
//! stored channel-major: coefficients as `[channel][n]`, trajectories as
//! `[channel][frame]`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum BasisError {
    #[error("need 1 <= n_basis <= n_frames (n_basis = {n_basis}, n_frames = {n_frames})")]
    InvalidSize { n_basis: usize, n_frames: usize },
    #[error("basis period must be positive and finite")]
    InvalidPeriod,
    #[error("coefficient or sample count does not match the basis")]
    ShapeMismatch,
    #[error("basis columns are linearly dependent for this period")]
    Singular,
}

/// Cosine coefficients for a set of scalar trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct DctCoefficients {
    channels: usize,
    n_basis: usize,
    n_frames: usize,
    coeffs: Vec<f64>,
}

impl DctCoefficients {
    pub fn zeros(channels: usize, n_basis: usize, n_frames: usize) -> Result<Self, BasisError> {
        Self::from_vec(channels, n_basis, n_frames, vec![0.0; channels * n_basis])
    }

    pub fn from_vec(
        channels: usize,
        n_basis: usize,
        n_frames: usize,
        coeffs: Vec<f64>,
    ) -> Result<Self, BasisError> {
        if n_basis == 0 || n_basis > n_frames {
            return Err(BasisError::InvalidSize { n_basis, n_frames });
        }
        if coeffs.len() != channels * n_basis {
            return Err(BasisError::ShapeMismatch);
        }
        Ok(Self {
            channels,
            n_basis,
            n_frames,
            coeffs,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn channel(&self, ch: usize) -> &[f64] {
        &self.coeffs[ch * self.n_basis..(ch + 1) * self.n_basis]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coeffs
    }
}

/// Precomputed synthesis matrix for one `(n_frames, n_basis, period)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineBasis {
    n_frames: usize,
    n_basis: usize,
    period: f64,
    /// `[frame][n]`
    matrix: Vec<f64>,
}

/// Single basis sample, without any precomputation.
pub fn basis_value(f: usize, n: usize, period: f64) -> f64 {
    if n == 0 {
        0.5
    } else {
        (core::f64::consts::PI * n as f64 * (f as f64 + 0.5) / period).cos()
    }
}

impl CosineBasis {
    pub fn new(n_frames: usize, n_basis: usize) -> Result<Self, BasisError> {
        Self::with_period(n_frames, n_basis, n_frames as f64)
    }

    /// Basis whose frequencies are normalized by `period` frames instead of
    /// the sequence length.
    pub fn with_period(n_frames: usize, n_basis: usize, period: f64) -> Result<Self, BasisError> {
        if n_basis == 0 || n_basis > n_frames {
            return Err(BasisError::InvalidSize { n_basis, n_frames });
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(BasisError::InvalidPeriod);
        }
        let mut matrix = Vec::with_capacity(n_frames * n_basis);
        for f in 0..n_frames {
            for n in 0..n_basis {
                matrix.push(basis_value(f, n, period));
            }
        }
        Ok(Self {
            n_frames,
            n_basis,
            period,
            matrix,
        })
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// `dx[f] / dc[n]`.
    #[inline]
    pub fn entry(&self, f: usize, n: usize) -> f64 {
        self.matrix[f * self.n_basis + n]
    }

    fn is_orthogonal(&self) -> bool {
        self.period == self.n_frames as f64
    }

    /// Synthesizes `channels` trajectories into `out` (`[channel][frame]`).
    pub fn evaluate_into(&self, coeffs: &[f64], out: &mut [f64]) {
        let channels = coeffs.len() / self.n_basis;
        debug_assert_eq!(coeffs.len(), channels * self.n_basis);
        debug_assert_eq!(out.len(), channels * self.n_frames);
        for ch in 0..channels {
            let c = &coeffs[ch * self.n_basis..(ch + 1) * self.n_basis];
            let x = &mut out[ch * self.n_frames..(ch + 1) * self.n_frames];
            for (f, xf) in x.iter_mut().enumerate() {
                let row = &self.matrix[f * self.n_basis..(f + 1) * self.n_basis];
                *xf = row.iter().zip(c).map(|(b, c)| b * c).sum();
            }
        }
    }

    pub fn evaluate(&self, coeffs: &DctCoefficients) -> Result<Vec<f64>, BasisError> {
        if coeffs.n_basis != self.n_basis || coeffs.n_frames != self.n_frames {
            return Err(BasisError::ShapeMismatch);
        }
        let mut out = vec![0.0; coeffs.channels * self.n_frames];
        self.evaluate_into(&coeffs.coeffs, &mut out);
        Ok(out)
    }

    /// Chain rule through the synthesis: given `dE/dx` (`[channel][frame]`),
    /// writes `dE/dc` (`[channel][n]`).
    pub fn backprop_into(&self, grad_traj: &[f64], grad_coeffs: &mut [f64]) {
        let channels = grad_traj.len() / self.n_frames;
        debug_assert_eq!(grad_coeffs.len(), channels * self.n_basis);
        grad_coeffs.iter_mut().for_each(|g| *g = 0.0);
        for ch in 0..channels {
            let gx = &grad_traj[ch * self.n_frames..(ch + 1) * self.n_frames];
            let gc = &mut grad_coeffs[ch * self.n_basis..(ch + 1) * self.n_basis];
            for (f, &g) in gx.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let row = &self.matrix[f * self.n_basis..(f + 1) * self.n_basis];
                for (gcn, b) in gc.iter_mut().zip(row) {
                    *gcn += b * g;
                }
            }
        }
    }

    /// Least-squares coefficients for `trajectory` (`[channel][frame]`).
    ///
    /// With the default period the basis columns are orthogonal, with
    /// squared norms `n_frames / 4` (DC) and `n_frames / 2`, so the fit is a
    /// scaled projection. Other periods solve the normal equations.
    pub fn fit(&self, trajectory: &[f64]) -> Result<DctCoefficients, BasisError> {
        if trajectory.len() % self.n_frames != 0 {
            return Err(BasisError::ShapeMismatch);
        }
        let channels = trajectory.len() / self.n_frames;
        let mut coeffs = vec![0.0; channels * self.n_basis];
        if self.is_orthogonal() {
            let nf = self.n_frames as f64;
            for ch in 0..channels {
                let x = &trajectory[ch * self.n_frames..(ch + 1) * self.n_frames];
                for n in 0..self.n_basis {
                    let dot: f64 = x.iter().enumerate().map(|(f, v)| v * self.entry(f, n)).sum();
                    let norm_sq = if n == 0 { nf / 4.0 } else { nf / 2.0 };
                    coeffs[ch * self.n_basis + n] = dot / norm_sq;
                }
            }
        } else {
            let b = DMatrix::from_row_slice(self.n_frames, self.n_basis, &self.matrix);
            let normal = b.transpose() * &b;
            let chol = normal.cholesky().ok_or(BasisError::Singular)?;
            for ch in 0..channels {
                let x = DVector::from_column_slice(
                    &trajectory[ch * self.n_frames..(ch + 1) * self.n_frames],
                );
                let c = chol.solve(&(b.transpose() * x));
                coeffs[ch * self.n_basis..(ch + 1) * self.n_basis].copy_from_slice(c.as_slice());
            }
        }
        DctCoefficients::from_vec(channels, self.n_basis, self.n_frames, coeffs)
    }
}

/// Synthesizes every channel of `c` with the default period.
pub fn idct_evaluate(c: &DctCoefficients) -> Vec<f64> {
    let basis = CosineBasis::new(c.n_frames, c.n_basis).expect("coefficients hold a valid size");
    basis.evaluate(c).expect("shapes match by construction")
}

/// Least-squares fit of `trajectory` (`[channel][frame]`, `n_frames` per
/// channel) onto `n_basis` cosines.
pub fn dct_fit(
    trajectory: &[f64],
    n_frames: usize,
    n_basis: usize,
) -> Result<DctCoefficients, BasisError> {
    CosineBasis::new(n_frames, n_basis)?.fit(trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Orthonormal DCT-II by direct summation; its transpose is the
    /// inverse.
    fn orthonormal_dct(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let nf = n as f64;
        (0..n)
            .map(|k| {
                let s: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(f, v)| v * (PI * k as f64 * (f as f64 + 0.5) / nf).cos())
                    .sum();
                let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
                s * scale
            })
            .collect()
    }

    fn orthonormal_idct_truncated(y: &[f64], keep: usize) -> Vec<f64> {
        let n = y.len();
        let nf = n as f64;
        (0..n)
            .map(|f| {
                (0..keep)
                    .map(|k| {
                        let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
                        y[k] * scale * (PI * k as f64 * (f as f64 + 0.5) / nf).cos()
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn dc_term_is_halved() {
        let mut c = DctCoefficients::zeros(1, 5, 12).unwrap();
        c.as_mut_slice()[0] = 2.0;
        assert!(idct_evaluate(&c).iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn constant_fits_to_dc() {
        let x = vec![3.25; 40];
        let c = dct_fit(&x, 40, 7).unwrap();
        assert!((c.as_slice()[0] - 6.5).abs() < 1e-12);
        assert!(c.as_slice()[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn full_basis_reproduces_trajectory() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 37;
        let x: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let c = dct_fit(&x, n, n).unwrap();
        let back = idct_evaluate(&c);
        let err = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");

        // the same coefficients via the orthonormal transform pair
        let y = orthonormal_dct(&x[..n]);
        for k in 0..n {
            let scale = if k == 0 { 2.0 / (n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
            assert!((c.as_slice()[k] - y[k] * scale).abs() < 1e-9);
        }
    }

    #[test]
    fn pure_cosine_has_single_coefficient() {
        let n = 50;
        let freq = 4;
        let x: Vec<f64> = (0..n).map(|f| 0.7 * basis_value(f, freq, n as f64)).collect();
        let c = dct_fit(&x, n, 10).unwrap();
        for (k, v) in c.as_slice().iter().enumerate() {
            let expected = if k == freq { 0.7 } else { 0.0 };
            assert!((v - expected).abs() < 1e-12, "k={k} v={v}");
        }
    }

    #[test]
    fn truncated_residual_equals_discarded_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 64;
        let keep = n / 4;
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c = dct_fit(&x, n, keep).unwrap();
        let approx = idct_evaluate(&c);
        let residual: f64 = x.iter().zip(&approx).map(|(a, b)| (a - b).powi(2)).sum();

        let y = orthonormal_dct(&x);
        let discarded: f64 = y[keep..].iter().map(|v| v * v).sum();
        assert!((residual - discarded).abs() < 1e-10);
        let oracle = orthonormal_idct_truncated(&y, keep);
        for (a, b) in approx.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let basis = CosineBasis::new(20, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h = 1e-6;
        for n in 0..6 {
            let (mut cp, mut cm) = (c.clone(), c.clone());
            cp[n] += h;
            cm[n] -= h;
            let (mut xp, mut xm) = (vec![0.0; 20], vec![0.0; 20]);
            basis.evaluate_into(&cp, &mut xp);
            basis.evaluate_into(&cm, &mut xm);
            for f in 0..20 {
                let fd = (xp[f] - xm[f]) / (2.0 * h);
                let exact = basis.entry(f, n);
                assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn backprop_is_transpose_of_synthesis() {
        let basis = CosineBasis::new(15, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut x = vec![0.0; 30];
        basis.evaluate_into(&c, &mut x);
        let mut gc = vec![0.0; 10];
        basis.backprop_into(&g, &mut gc);
        let lhs: f64 = x.iter().zip(&g).map(|(a, b)| a * b).sum();
        let rhs: f64 = c.iter().zip(&gc).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn explicit_period_fits_by_least_squares() {
        let basis = CosineBasis::with_period(30, 6, 45.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let c: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut x = vec![0.0; 30];
        basis.evaluate_into(&c, &mut x);
        let fit = basis.fit(&x).unwrap();
        for (a, b) in fit.as_slice().iter().zip(&c) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_sizes() {
        assert!(CosineBasis::new(10, 0).is_err());
        assert!(CosineBasis::new(10, 11).is_err());
        assert!(CosineBasis::with_period(10, 3, 0.0).is_err());
    }
}
