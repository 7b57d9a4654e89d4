//! Wave classification by normalized cross-correlation against noise-free
//! Gaussian prototypes.

use crate::error::{Error, Result};
use crate::signal::WaveClass;
use crate::synth::{GaussianBeatConfig, GaussianComponent, MASK_SIGMAS};

use super::xcorr::cross_correlation;

/// Fraction of the segment length searched on either side of zero lag.
pub const LAG_FRACTION: f64 = 0.1;

/// One prototype per wave class, described analytically so it can be
/// rendered on any sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Templates {
    fs: f64,
    prototypes: Vec<(WaveClass, Vec<GaussianComponent>, f64)>,
}

impl Templates {
    /// Prototypes from a beat configuration: P and T are single lobes, QRS
    /// is Q + R + S. Each prototype is centred on the middle of its 3-sigma
    /// support.
    pub fn from_config(cfg: &GaussianBeatConfig) -> Self {
        let span = |cs: &[GaussianComponent]| {
            let lo = cs.iter().map(|c| c.center - MASK_SIGMAS * c.width).fold(f64::INFINITY, f64::min);
            let hi = cs.iter().map(|c| c.center + MASK_SIGMAS * c.width).fold(f64::NEG_INFINITY, f64::max);
            (lo + hi) / 2.0
        };
        let groups = [
            (WaveClass::P, vec![cfg.p]),
            (WaveClass::Qrs, vec![cfg.q, cfg.r, cfg.s]),
            (WaveClass::T, vec![cfg.t]),
        ];
        let prototypes = groups
            .into_iter()
            .map(|(class, cs)| {
                let mid = span(&cs);
                (class, cs, mid)
            })
            .collect();
        Self { fs: cfg.fs, prototypes }
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    /// Renders the prototype for `class` on a `len`-sample grid at the
    /// template rate, centred on the grid.
    pub fn render(&self, class: WaveClass, len: usize) -> Option<Vec<f64>> {
        let (_, cs, mid) = self.prototypes.iter().find(|(c, _, _)| *c == class)?;
        let centre = (len as f64 - 1.0) / 2.0;
        Some(
            (0..len)
                .map(|i| {
                    let t = mid + (i as f64 - centre) / self.fs;
                    cs.iter().map(|c| c.value(t)).sum()
                })
                .collect(),
        )
    }
}

impl Default for Templates {
    fn default() -> Self {
        Self::from_config(&GaussianBeatConfig::default())
    }
}

/// Best class and its peak normalized correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub class: WaveClass,
    pub score: f64,
}

/// Assigns the class whose prototype (rendered to the segment's length)
/// correlates best within ±10 % lag. Ties go to the earlier class in
/// P, QRS, T order.
pub fn classify_segment(segment: &[f64], templates: &Templates) -> Result<Classification> {
    if segment.len() < 3 {
        return Err(Error::SegmentTooShort(segment.len()));
    }
    let max_lag = ((segment.len() as f64 * LAG_FRACTION).floor() as usize).min(segment.len() - 1);
    let mut best: Option<Classification> = None;
    for class in WaveClass::WAVES {
        let Some(template) = templates.render(class, segment.len()) else {
            continue;
        };
        let (_, score) = cross_correlation(&template, segment, max_lag)?.peak();
        if best.map_or(true, |b| score > b.score) {
            best = Some(Classification { class, score });
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("no templates".into()))
}
