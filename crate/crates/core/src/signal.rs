//! 1D filters shared by rotation-track cleanup and speed estimation.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;


/// Sliding median with edge replication. `window` is rounded up to odd.
pub fn median_filter(x: &[f64], window: usize) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let half = window.max(1) / 2;
    let mut buf = Vec::with_capacity(2 * half + 1);
    (0..n)
        .map(|i| {
            buf.clear();
            for k in 0..=2 * half {
                let idx = (i + k).saturating_sub(half).min(n - 1);
                buf.push(x[idx]);
            }
            buf.sort_by(|a, b| a.total_cmp(b));
            buf[half]
        })
        .collect()
}

/// Unnormalized Gaussian taps for offsets `-radius..=radius`, with
/// `radius = ceil(truncate * sigma)`.
pub fn gaussian_kernel(sigma: f64, truncate: f64) -> Vec<f64> {
    let radius = (truncate * sigma).ceil() as isize;
    (-radius..=radius)
        .map(|k| (-0.5 * (k as f64 / sigma).powi(2)).exp())
        .collect()
}

/// Gaussian smoothing truncated at 4 sigma. Taps falling outside the
/// sequence are dropped and the remaining weights renormalized. A
/// nonpositive `sigma` returns the input unchanged.
pub fn gaussian_smooth(x: &[f64], sigma: f64) -> Vec<f64> {
    if !(sigma > 0.0) {
        return x.to_vec();
    }
    let kernel = gaussian_kernel(sigma, 4.0);
    let radius = (kernel.len() / 2) as isize;
    let n = x.len() as isize;
    (0..n)
        .map(|i| {
            let (mut acc, mut wsum) = (0.0, 0.0);
            for (k, w) in kernel.iter().enumerate() {
                let j = i + k as isize - radius;
                if (0..n).contains(&j) {
                    acc += w * x[j as usize];
                    wsum += w;
                }
            }
            acc / wsum
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn median_removes_spike_and_keeps_constants() {
        let mut x = vec![0.25; 12];
        assert_eq!(median_filter(&x, 7), x);
        x[5] = 9.0;
        assert!(median_filter(&x, 7).iter().all(|&v| v == 0.25));
    }

    #[test]
    fn median_replicates_edges() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        // first window is [1, 1, 1, 1, 2, 3, 4]
        assert_eq!(median_filter(&x, 7)[0], 1.0);
        assert_eq!(median_filter(&x, 7)[4], 5.0);
    }

    #[test]
    fn gaussian_matches_naive_convolution() {
        let x: Vec<f64> = (0..60).map(|i| (i as f64 * 0.37).sin() + 0.01 * i as f64).collect();
        let sigma = 3.0;
        let got = gaussian_smooth(&x, sigma);
        for i in 0..x.len() {
            let (mut num, mut den) = (0.0, 0.0);
            for j in 0..x.len() {
                let d = i as f64 - j as f64;
                if d.abs() <= 12.0 {
                    let w = (-(d * d) / (2.0 * sigma * sigma)).exp();
                    num += w * x[j];
                    den += w;
                }
            }
            assert!((got[i] - num / den).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_preserves_constants_and_interior_ramps() {
        let c = vec![-1.5; 30];
        assert!(gaussian_smooth(&c, 3.0).iter().all(|v| (v + 1.5).abs() < 1e-14));
        let ramp: Vec<f64> = (0..40).map(|i| 0.1 * i as f64).collect();
        let s = gaussian_smooth(&ramp, 3.0);
        for i in 12..28 {
            assert!((s[i] - ramp[i]).abs() < 1e-12);
        }
    }
}
