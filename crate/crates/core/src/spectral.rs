//! One-sided magnitude spectra, dominant-frequency features and the
//! similarity score used to accept synthetic signals.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fft;
use crate::signal::{LabelMask, SampledSignal, WaveClass};

pub const DEFAULT_N_FFT: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    freqs: Vec<f64>,
    mags: Vec<f64>,
    fs: f64,
    n_fft: usize,
}

impl Spectrum {
    /// Builds a spectrum on the standard `0..=fs/2` grid of an `n_fft`-point transform.
    pub fn from_magnitudes(mags: Vec<f64>, fs: f64, n_fft: usize) -> Result<Self> {
        let bins = n_fft / 2 + 1;
        if mags.len() != bins {
            return Err(Error::ShapeMismatch(format!(
                "{} magnitudes for an {n_fft}-point grid of {bins} bins",
                mags.len()
            )));
        }
        if mags.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidParameter("magnitudes must be finite and non-negative".into()));
        }
        let freqs = (0..bins).map(|k| k as f64 * fs / n_fft as f64).collect();
        Ok(Self { freqs, mags, fs, n_fft })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn mags(&self) -> &[f64] {
        &self.mags
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn bin_width(&self) -> f64 {
        self.fs / self.n_fft as f64
    }

    fn check_compatible(&self, other: &Spectrum) -> Result<()> {
        if self.n_fft != other.n_fft || self.fs != other.fs {
            return Err(Error::ResolutionMismatch(format!(
                "{}-point grid at {} Hz vs {}-point grid at {} Hz",
                self.n_fft, self.fs, other.n_fft, other.fs
            )));
        }
        Ok(())
    }

    /// Writes `freq_hz,magnitude` rows with a header.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "freq_hz,magnitude")?;
        for (f, m) in self.freqs.iter().zip(&self.mags) {
            writeln!(w, "{f},{m}")?;
        }
        Ok(())
    }
}

/// Magnitude spectrum of the first `n_fft` samples, zero-padded if shorter.
pub fn dft(signal: &SampledSignal, n_fft: usize) -> Result<Spectrum> {
    dft_samples(signal.samples(), signal.fs(), n_fft)
}

pub fn dft_samples(samples: &[f64], fs: f64, n_fft: usize) -> Result<Spectrum> {
    if samples.is_empty() {
        return Err(Error::EmptySignal);
    }
    if n_fft < 2 {
        return Err(Error::InvalidParameter(format!("n_fft {n_fft} must be at least 2")));
    }
    let mut frame = vec![0.0; n_fft];
    let take = samples.len().min(n_fft);
    frame[..take].copy_from_slice(&samples[..take]);
    let full = fft::forward_real(&frame);
    let mags = full[..n_fft / 2 + 1].iter().map(|z| z.norm()).collect();
    Spectrum::from_magnitudes(mags, fs, n_fft)
}

/// Frequency of the largest bin inside `[lo, hi]`; ties go to the lower frequency.
pub fn dominant_frequency(spec: &Spectrum, lo: f64, hi: f64) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for (&f, &m) in spec.freqs.iter().zip(&spec.mags) {
        if f < lo || f > hi {
            continue;
        }
        match best {
            Some((_, bm)) if m <= bm => {}
            _ => best = Some((f, m)),
        }
    }
    best.map(|(f, _)| f).ok_or(Error::EmptyBand { lo, hi })
}

/// Cosine similarity of two magnitude vectors on the same grid.
pub fn spectral_similarity(a: &Spectrum, b: &Spectrum) -> Result<f64> {
    a.check_compatible(b)?;
    let dot: f64 = a.mags.iter().zip(&b.mags).map(|(x, y)| x * y).sum();
    let na = a.mags.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.mags.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroSpectrum);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Average spectrum of every contiguous occurrence of `class` in `mask`.
///
/// Each occurrence is extracted on its own and zero-padded to `n_fft`
/// (occurrences longer than `n_fft` are truncated to their prefix).
pub fn segment_spectrum(
    signal: &SampledSignal,
    mask: &LabelMask,
    class: WaveClass,
    n_fft: usize,
) -> Result<Spectrum> {
    if mask.len() != signal.len() {
        return Err(Error::LengthMismatch(signal.len(), mask.len()));
    }
    let runs = mask.runs(class);
    if runs.is_empty() {
        return Err(Error::ClassAbsent(class.name().into()));
    }
    let mut acc = vec![0.0; n_fft / 2 + 1];
    for &(start, end) in &runs {
        let spec = dft_samples(&signal.samples()[start..end], signal.fs(), n_fft)?;
        for (a, m) in acc.iter_mut().zip(spec.mags()) {
            *a += m;
        }
    }
    let k = runs.len() as f64;
    acc.iter_mut().for_each(|a| *a /= k);
    Spectrum::from_magnitudes(acc, signal.fs(), n_fft)
}

/// Spectra for P, QRS and T; fails on the first absent class.
pub fn segment_spectra(
    signal: &SampledSignal,
    mask: &LabelMask,
    n_fft: usize,
) -> Result<BTreeMap<WaveClass, Spectrum>> {
    WaveClass::WAVES
        .iter()
        .map(|&c| segment_spectrum(signal, mask, c, n_fft).map(|s| (c, s)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sig(x: Vec<f64>) -> SampledSignal {
        SampledSignal::new(x, 250.0).unwrap()
    }

    #[test]
    fn dc_impulse() {
        let s = dft(&sig(vec![1.0; 512]), 512).unwrap();
        assert_eq!(s.freqs().len(), 257);
        assert!((s.mags()[0] - 512.0).abs() < 1e-9);
        assert!(s.mags()[1..].iter().all(|&m| m < 1e-9));
    }

    #[test]
    fn on_bin_cosine() {
        // bin 20 of 512 at 250 Hz
        let f0 = 20.0 * 250.0 / 512.0;
        let x = (0..512).map(|i| (2.0 * PI * f0 * i as f64 / 250.0).cos()).collect();
        let s = dft(&sig(x), 512).unwrap();
        assert!((s.mags()[20] - 256.0).abs() < 1e-6);
        assert_eq!(dominant_frequency(&s, 0.0, 125.0).unwrap(), f0);
    }

    #[test]
    fn truncation_takes_prefix() {
        let mut x = vec![1.0; 8];
        x.extend(vec![100.0; 8]);
        let s = dft(&sig(x), 8).unwrap();
        assert!((s.mags()[0] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn dominant_frequency_ties_and_empty_band() {
        let s = Spectrum::from_magnitudes(vec![1.0; 257], 250.0, 512).unwrap();
        assert_eq!(dominant_frequency(&s, 0.0, 125.0).unwrap(), 0.0);
        let lowest = dominant_frequency(&s, 10.0, 125.0).unwrap();
        assert!(lowest >= 10.0 && lowest - 10.0 < s.bin_width());
        assert!(matches!(dominant_frequency(&s, 0.1, 0.2), Err(Error::EmptyBand { .. })));
    }

    #[test]
    fn similarity_examples() {
        let a = Spectrum::from_magnitudes(vec![1.0, 2.0, 3.0], 250.0, 4).unwrap();
        let b = Spectrum::from_magnitudes(vec![2.0, 4.0, 6.0], 250.0, 4).unwrap();
        assert!((spectral_similarity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!((spectral_similarity(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        let x = Spectrum::from_magnitudes(vec![1.0, 0.0, 0.0], 250.0, 4).unwrap();
        let y = Spectrum::from_magnitudes(vec![0.0, 0.0, 5.0], 250.0, 4).unwrap();
        assert_eq!(spectral_similarity(&x, &y).unwrap(), 0.0);
        let z = Spectrum::from_magnitudes(vec![0.0; 3], 250.0, 4).unwrap();
        assert_eq!(spectral_similarity(&x, &z), Err(Error::ZeroSpectrum));
        let other = Spectrum::from_magnitudes(vec![1.0; 3], 500.0, 4).unwrap();
        assert!(matches!(spectral_similarity(&x, &other), Err(Error::ResolutionMismatch(_))));
    }

    #[test]
    fn segment_spectra_absent_classes() {
        let s = sig(vec![0.5; 40]);
        let m = LabelMask::background(40);
        for c in WaveClass::WAVES {
            assert!(matches!(segment_spectrum(&s, &m, c, 64), Err(Error::ClassAbsent(_))));
        }
        assert!(segment_spectra(&s, &m, 64).is_err());
    }

    #[test]
    fn identical_occurrences_average_to_one() {
        use WaveClass::*;
        let beat = [0.0, 1.0, 3.0, 1.0, 0.0, 0.0];
        let labels = [Background, Qrs, Qrs, Qrs, Background, Background];
        let one = segment_spectrum(&sig(beat.to_vec()), &LabelMask::new(labels.to_vec()), Qrs, 16)
            .unwrap();
        let two_x: Vec<f64> = beat.iter().chain(&beat).copied().collect();
        let two_m: Vec<WaveClass> = labels.iter().chain(&labels).copied().collect();
        let two = segment_spectrum(&sig(two_x), &LabelMask::new(two_m), Qrs, 16).unwrap();
        for (a, b) in one.mags().iter().zip(two.mags()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
