//! Uniformly sampled signals, per-sample wave labels and the conditioning
//! chain applied before any transform: band-pass, z-normalization and
//! integer decimation.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;

/// Width in Hz of the raised-cosine transition at each band edge.
pub const TRANSITION_WIDTH_HZ: f64 = 0.25;

/// A real-valued trace sampled at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    samples: Vec<f64>,
    fs: f64,
}

impl SampledSignal {
    pub fn new(samples: Vec<f64>, fs: f64) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidSignal(format!("sampling rate {fs} must be positive")));
        }
        if samples.is_empty() {
            return Err(Error::InvalidSignal("signal has no samples".into()));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidSignal(format!("sample {i} is not finite")));
        }
        Ok(Self { samples, fs })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds, `len / fs`.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    /// Same rate, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, self.fs)
    }

    /// Reads the `fs,<rate>` CSV format.
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::ParseError {
            location: "line 1".into(),
            message: "empty file".into(),
        })?;
        let header = header?;
        let fs = header
            .strip_prefix("fs,")
            .ok_or_else(|| Error::ParseError {
                location: "line 1".into(),
                message: format!("expected `fs,<rate>`, found `{header}`"),
            })
            .and_then(|rate| {
                rate.parse::<f64>().map_err(|e| Error::ParseError {
                    location: "line 1, field rate".into(),
                    message: e.to_string(),
                })
            })?;
        let mut samples = Vec::new();
        for (i, line) in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let x = line.parse::<f64>().map_err(|e| Error::ParseError {
                location: format!("line {}", i + 1),
                message: format!("`{line}`: {e}"),
            })?;
            samples.push(x);
        }
        Self::new(samples, fs).map_err(|e| Error::ParseError {
            location: "signal".into(),
            message: e.to_string(),
        })
    }

    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "fs,{}", self.fs)?;
        for x in &self.samples {
            writeln!(writer, "{x}")?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::IoFailure(format!("{}: {e}", path.display())))?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)
            .map_err(|e| Error::IoFailure(format!("{}: {e}", path.display())))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Per-sample label classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WaveClass {
    #[serde(rename = "BACKGROUND")]
    Background,
    P,
    #[serde(rename = "QRS")]
    Qrs,
    T,
}

impl WaveClass {
    /// The three wave classes in tie-break order.
    pub const WAVES: [WaveClass; 3] = [WaveClass::P, WaveClass::Qrs, WaveClass::T];

    pub fn id(self) -> u8 {
        match self {
            WaveClass::Background => 0,
            WaveClass::P => 1,
            WaveClass::Qrs => 2,
            WaveClass::T => 3,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(WaveClass::Background),
            1 => Some(WaveClass::P),
            2 => Some(WaveClass::Qrs),
            3 => Some(WaveClass::T),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WaveClass::Background => "BACKGROUND",
            WaveClass::P => "P",
            WaveClass::Qrs => "QRS",
            WaveClass::T => "T",
        }
    }

    /// Overlap priority: QRS > P > T > background.
    pub fn priority(self) -> u8 {
        match self {
            WaveClass::Background => 0,
            WaveClass::T => 1,
            WaveClass::P => 2,
            WaveClass::Qrs => 3,
        }
    }

    /// Returns whichever of the two claims wins on overlap.
    pub fn resolve(self, other: WaveClass) -> WaveClass {
        if other.priority() > self.priority() {
            other
        } else {
            self
        }
    }
}

impl fmt::Display for WaveClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WaveClass {
    type Err = Error;

    /// Exact, case-sensitive match.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "BACKGROUND" => Ok(WaveClass::Background),
            "P" => Ok(WaveClass::P),
            "QRS" => Ok(WaveClass::Qrs),
            "T" => Ok(WaveClass::T),
            other => Err(Error::ParseError {
                location: "label".into(),
                message: format!("unknown class `{other}`"),
            }),
        }
    }
}

/// One class per sample of a companion signal.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelMask {
    classes: Vec<WaveClass>,
}

impl LabelMask {
    pub fn new(classes: Vec<WaveClass>) -> Self {
        Self { classes }
    }

    pub fn background(len: usize) -> Self {
        Self { classes: vec![WaveClass::Background; len] }
    }

    pub fn classes(&self) -> &[WaveClass] {
        &self.classes
    }

    pub fn classes_mut(&mut self) -> &mut [WaveClass] {
        &mut self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// 1 where the sample belongs to `wave`, 0 elsewhere.
    pub fn binary(&self, wave: WaveClass) -> Vec<u8> {
        self.classes.iter().map(|&c| u8::from(c == wave)).collect()
    }

    /// Half-open `[start, end)` index runs of `class`.
    pub fn runs(&self, class: WaveClass) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut start = None;
        for (i, &c) in self.classes.iter().enumerate() {
            match (c == class, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    runs.push((s, i));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push((s, self.classes.len()));
        }
        runs
    }

    pub fn count(&self, class: WaveClass) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }
}

/// Z-normalization with the population standard deviation.
pub fn normalize(signal: &SampledSignal) -> Result<SampledSignal> {
    let x = signal.samples();
    if x.len() < 2 {
        return Err(Error::InvalidSignal("normalize needs at least 2 samples".into()));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 || !std.is_normal() {
        return Err(Error::ConstantSignal);
    }
    signal.with_samples(x.iter().map(|v| (v - mean) / std).collect())
}

/// Gain of the band-pass mask at frequency `f`.
///
/// Each edge gets a raised-cosine ramp of [`TRANSITION_WIDTH_HZ`] centred on
/// it. An edge at exactly 0 Hz is treated as absent so that DC passes.
pub fn bandpass_gain(f: f64, lo: f64, hi: f64) -> f64 {
    let half = TRANSITION_WIDTH_HZ / 2.0;
    let ramp = |f: f64, edge: f64| -> f64 {
        if f <= edge - half {
            0.0
        } else if f >= edge + half {
            1.0
        } else {
            0.5 * (1.0 - (std::f64::consts::PI * (f - (edge - half)) / TRANSITION_WIDTH_HZ).cos())
        }
    };
    let rise = if lo > 0.0 { ramp(f, lo) } else { 1.0 };
    let fall = 1.0 - ramp(f, hi);
    rise * fall
}

/// Zero-phase band-pass by masking the spectrum of the whole record.
pub fn bandpass(signal: &SampledSignal, lo: f64, hi: f64) -> Result<SampledSignal> {
    let nyquist = signal.fs() / 2.0;
    if !(lo >= 0.0 && lo < hi && hi < nyquist) {
        return Err(Error::BandOutOfRange { lo, hi, nyquist });
    }
    let n = signal.len();
    let mut spectrum = fft::forward_real(signal.samples());
    for (k, z) in spectrum.iter_mut().enumerate() {
        *z *= bandpass_gain(fft::bin_frequency(k, n, signal.fs()), lo, hi);
    }
    fft::inverse_in_place(&mut spectrum);
    signal.with_samples(spectrum.into_iter().map(|z| z.re).collect())
}

/// Keeps every k-th sample, `k = fs / target_fs`.
pub fn downsample(signal: &SampledSignal, target_fs: f64) -> Result<SampledSignal> {
    if !(target_fs.is_finite() && target_fs > 0.0) {
        return Err(Error::InvalidParameter(format!("target rate {target_fs} must be positive")));
    }
    let ratio = signal.fs() / target_fs;
    let factor = ratio.round();
    if factor < 1.0 || (ratio - factor).abs() > 1e-9 * ratio {
        return Err(Error::NonIntegerFactor { fs: signal.fs(), target_fs });
    }
    let k = factor as usize;
    if k == 1 {
        return Ok(signal.clone());
    }
    let samples = signal.samples().iter().step_by(k).copied().collect();
    SampledSignal::new(samples, target_fs)
}

/// Band edges and target rate of the conditioning chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conditioning {
    pub target_fs: f64,
    pub band_lo: f64,
    pub band_hi: f64,
}

impl Default for Conditioning {
    fn default() -> Self {
        Self { target_fs: 250.0, band_lo: 0.5, band_hi: 50.0 }
    }
}

impl Conditioning {
    /// Downsample, band-pass, then z-normalize.
    pub fn apply(&self, signal: &SampledSignal) -> Result<SampledSignal> {
        let s = downsample(signal, self.target_fs)?;
        let s = bandpass(&s, self.band_lo, self.band_hi)?;
        normalize(&s)
    }
}
