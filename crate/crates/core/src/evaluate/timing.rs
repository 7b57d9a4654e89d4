//! Wall-clock measurement of inference and preprocessing.

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::neural::{model_forward, Mode, ModelParams};
use crate::signal::SampledSignal;
use crate::transforms::Preprocessing;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub median_ms: f64,
    pub repeats: usize,
    pub host: String,
}

/// OS, architecture and available parallelism of the measuring machine.
pub fn host_descriptor() -> String {
    let cpus = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    format!("{}-{} ({cpus} logical cpus)", std::env::consts::OS, std::env::consts::ARCH)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Median of `repeats` timed calls after one untimed warm-up.
pub fn time_median<F: FnMut() -> Result<()>>(repeats: usize, mut f: F) -> Result<Timing> {
    if repeats < 3 {
        return Err(Error::InvalidParameter(format!("repeats {repeats} must be at least 3")));
    }
    f()?;
    let mut samples = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        f()?;
        samples.push(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(Timing { median_ms: median(samples), repeats, host: host_descriptor() })
}

/// Eval-mode forward pass only; preprocessing is not included.
pub fn time_inference(params: &ModelParams, input: &[f64], repeats: usize) -> Result<Timing> {
    time_median(repeats, || model_forward(params, input, Mode::Eval).map(|_| ()))
}

/// The transform alone, measured separately from inference.
pub fn time_preprocessing(pre: &Preprocessing, signal: &SampledSignal, repeats: usize) -> Result<Timing> {
    time_median(repeats, || pre.apply(signal).map(|_| ()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn needs_three_repeats() {
        assert!(time_median(2, || Ok(())).is_err());
        let t = time_median(3, || Ok(())).unwrap();
        assert!(t.median_ms >= 0.0 && t.median_ms.is_finite());
        assert!(!t.host.is_empty());
    }
}
