//! Thin wrappers around `rustfft` fixing the transform convention:
//! forward transforms are unnormalized with a negative exponent, inverse
//! transforms carry the 1/N factor.

use num_complex::Complex64;
use rustfft::FftPlanner;

pub fn forward(data: &mut [Complex64]) {
    if data.is_empty() {
        return;
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(data.len()).process(data);
}

pub fn inverse(data: &mut [Complex64]) {
    if data.is_empty() {
        return;
    }
    let n = data.len();
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(n).process(data);
    let scale = 1.0 / n as f64;
    for v in data.iter_mut() {
        *v *= scale;
    }
}

pub fn forward_real(data: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    forward(&mut buf);
    buf
}

/// Even extension used by the DCT-I: `x` followed by its reverse without the
/// first and last elements, giving length `2(n-1)`.
pub fn symmetric_extension(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let mut out = Vec::with_capacity(2 * n.saturating_sub(1));
    out.extend(x.iter().map(|&v| Complex64::new(v, 0.0)));
    if n > 2 {
        out.extend(x[1..n - 1].iter().rev().map(|&v| Complex64::new(v, 0.0)));
    }
    out
}

/// Frequency index of FFT bin `k` in a length-`n` transform (NumPy `fftfreq`
/// layout, unscaled): 0, 1, …, ⌈n/2⌉-1, -⌊n/2⌋, …, -1.
#[inline]
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}
