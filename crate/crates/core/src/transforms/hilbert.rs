//! Discrete analytic signal by the one-sided spectrum method.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fft;
use crate::signal::SampledSignal;

/// Instantaneous amplitude and phase of a real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSignal {
    /// The Hilbert transform of the input (imaginary part of the analytic signal).
    pub quadrature: Vec<f64>,
    pub envelope: Vec<f64>,
    /// Radians in (-pi, pi].
    pub phase: Vec<f64>,
    pub fs: f64,
}

impl AnalyticSignal {
    pub fn len(&self) -> usize {
        self.envelope.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envelope.is_empty()
    }

    pub fn envelope_signal(&self) -> Result<SampledSignal> {
        SampledSignal::new(self.envelope.clone(), self.fs)
    }

    pub fn phase_signal(&self) -> Result<SampledSignal> {
        SampledSignal::new(self.phase.clone(), self.fs)
    }
}

/// Zeroes negative frequencies, doubles positive ones (DC and Nyquist
/// untouched), and inverts.
pub fn hilbert(signal: &SampledSignal) -> Result<AnalyticSignal> {
    let n = signal.len();
    if n < 4 {
        return Err(Error::EmptySignal);
    }
    let mut spectrum = fft::forward_real(signal.samples());
    let positive_end = n.div_ceil(2); // exclusive; bins 1..positive_end are doubled
    for z in &mut spectrum[1..positive_end] {
        *z *= 2.0;
    }
    let negative_start = n / 2 + 1;
    for z in &mut spectrum[negative_start..] {
        *z = 0.0.into();
    }
    fft::inverse_in_place(&mut spectrum);

    let mut quadrature = Vec::with_capacity(n);
    let mut envelope = Vec::with_capacity(n);
    let mut phase = Vec::with_capacity(n);
    for (z, &x) in spectrum.iter().zip(signal.samples()) {
        // the real part reproduces the input up to rounding; keep the input exactly
        quadrature.push(z.im);
        envelope.push(x.hypot(z.im));
        let mut p = z.im.atan2(x);
        if p <= -PI {
            p = PI;
        }
        phase.push(p);
    }
    Ok(AnalyticSignal { quadrature, envelope, phase, fs: signal.fs() })
}
