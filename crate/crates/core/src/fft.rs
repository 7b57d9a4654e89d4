//! Thin wrappers over `rustfft` for real-input transforms of arbitrary length.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Full two-sided forward transform of a real sequence, unnormalized.
pub fn forward_real(samples: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    forward_in_place(&mut buf);
    buf
}

pub fn forward_in_place(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(buf.len()).process(buf);
}

/// Inverse transform including the 1/N normalization.
pub fn inverse_in_place(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    let n = buf.len();
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(n).process(buf);
    let scale = 1.0 / n as f64;
    for z in buf.iter_mut() {
        *z *= scale;
    }
}

/// Frequency in Hz of bin `k` of an `n`-point transform, folded so that bins
/// past Nyquist report their (positive) mirror frequency.
pub fn bin_frequency(k: usize, n: usize, fs: f64) -> f64 {
    let folded = if k <= n / 2 { k } else { n - k };
    folded as f64 * fs / n as f64
}
