//! Sliding-window quadrature mean.

use crate::error::{Error, Result};
use crate::signal::SampledSignal;

use super::quadrature::{gauss_legendre_rule, QuadratureRule};

pub const DEFAULT_WINDOW: f64 = 0.04;
pub const DEFAULT_NODES: usize = 5;

fn interpolate(x: &[f64], u: f64) -> f64 {
    let last = (x.len() - 1) as f64;
    let u = u.clamp(0.0, last);
    let i = u.floor() as usize;
    if i + 1 >= x.len() {
        return x[x.len() - 1];
    }
    let frac = u - i as f64;
    x[i] + frac * (x[i + 1] - x[i])
}

/// Mean of the signal over `[t - window/2, t + window/2]` at every sample,
/// computed with an `n`-point Gauss–Legendre rule. Node values come from
/// linear interpolation, clamped to the first and last sample.
pub fn gl_smooth(signal: &SampledSignal, window: f64, n: usize) -> Result<SampledSignal> {
    let rule = gauss_legendre_rule(n)?;
    gl_smooth_with(signal, window, &rule)
}

pub fn gl_smooth_with(signal: &SampledSignal, window: f64, rule: &QuadratureRule) -> Result<SampledSignal> {
    let fs = signal.fs();
    // a hair of slack so that window = 2/fs computed in floating point still passes
    if !(window.is_finite() && window * fs >= 2.0 - 1e-9) {
        return Err(Error::WindowTooSmall { window, fs });
    }
    let x = signal.samples();
    let half_samples = window * fs / 2.0;
    let offsets: Vec<f64> = rule.nodes().iter().map(|&node| node * half_samples).collect();
    let out = (0..x.len())
        .map(|i| {
            let centre = i as f64;
            0.5 * offsets
                .iter()
                .zip(rule.weights())
                .map(|(&off, &w)| w * interpolate(x, centre + off))
                .sum::<f64>()
        })
        .collect();
    signal.with_samples(out)
}
