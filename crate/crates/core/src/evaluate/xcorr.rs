//! Lagged cross-correlation.

use crate::error::{Error, Result};

/// Correlation at every lag in `[-max_lag, max_lag]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCorrelation {
    pub lags: Vec<i64>,
    pub raw: Vec<f64>,
    /// `raw / (|x| |y|)`; all zero when either input has zero energy.
    pub normalized: Vec<f64>,
}

impl CrossCorrelation {
    /// Lag of the largest normalized value (the most negative lag on ties).
    pub fn peak(&self) -> (i64, f64) {
        let mut best = 0;
        for (i, &v) in self.normalized.iter().enumerate() {
            if v > self.normalized[best] {
                best = i;
            }
        }
        (self.lags[best], self.normalized[best])
    }
}

/// `r[l] = sum_t x(t) y(t - l)`, treating `y` as zero outside its support.
pub fn cross_correlation(x: &[f64], y: &[f64], max_lag: usize) -> Result<CrossCorrelation> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyInput);
    }
    if max_lag >= x.len() {
        return Err(Error::InvalidParameter(format!(
            "max_lag {max_lag} must be below the reference length {}",
            x.len()
        )));
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt() * y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let m = max_lag as i64;
    let mut lags = Vec::with_capacity(2 * max_lag + 1);
    let mut raw = Vec::with_capacity(2 * max_lag + 1);
    for l in -m..=m {
        // t - l in [0, len_y)  =>  t in [l, l + len_y)
        let start = l.max(0) as usize;
        let end = (l + y.len() as i64).clamp(0, x.len() as i64) as usize;
        let mut acc = 0.0;
        for t in start..end {
            acc += x[t] * y[(t as i64 - l) as usize];
        }
        lags.push(l);
        raw.push(acc);
    }
    let normalized = if norm > 0.0 { raw.iter().map(|r| r / norm).collect() } else { vec![0.0; raw.len()] };
    Ok(CrossCorrelation { lags, raw, normalized })
}
