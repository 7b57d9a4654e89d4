//! Forward-difference derivative.

use crate::error::{Error, Result};
use crate::signal::SampledSignal;

pub const DEFAULT_DT: f64 = 0.005;

/// The step actually realizable at `fs`: `round(dt * fs)` samples.
pub fn euler_step(dt: f64, fs: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt {dt} must be positive")));
    }
    let step = (dt * fs).round();
    if step < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "dt {dt} s is below half a sample at {fs} Hz"
        )));
    }
    Ok(step as usize)
}

/// `(x[i + step] - x[i]) / (step / fs)`; the last `step` outputs repeat the
/// last computed value.
pub fn euler_diff(signal: &SampledSignal, dt: f64) -> Result<SampledSignal> {
    let step = euler_step(dt, signal.fs())?;
    let x = signal.samples();
    if step >= x.len() {
        return Err(Error::StepTooLarge { step, len: x.len() });
    }
    let h = step as f64 / signal.fs();
    let mut out: Vec<f64> = x.windows(step + 1).map(|w| (w[step] - w[0]) / h).collect();
    let last = *out.last().expect("step < len leaves at least one difference");
    out.resize(x.len(), last);
    signal.with_samples(out)
}
