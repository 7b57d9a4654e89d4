//! Gaussian-sum synthetic ECG with exact ground-truth masks.
//!
//! A beat is the sum of five Gaussian lobes (P, Q, R, S, T). The label mask
//! marks every sample within three standard deviations of a (non-zero) lobe centre,
//! with Q, R and S merged into one QRS class and overlaps resolved
//! QRS > P > T.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{LabelMask, SampledSignal, WaveClass};
use crate::spectral::{self, Spectrum};

/// Half-width of the labelled region around each lobe, in standard deviations.
pub const MASK_SIGMAS: f64 = 3.0;

/// Lobes are evaluated only within this many standard deviations of their
/// centre; beyond it the contribution is below 1e-21 of the amplitude.
const SUPPORT_SIGMAS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    /// mV, negative for Q and S.
    pub amplitude: f64,
    /// Seconds from beat onset.
    pub center: f64,
    /// Standard deviation in seconds.
    pub width: f64,
}

impl GaussianComponent {
    pub fn new(amplitude: f64, center: f64, width: f64) -> Self {
        Self { amplitude, center, width }
    }

    pub fn value(&self, t: f64) -> f64 {
        let d = t - self.center;
        self.amplitude * (-(d * d) / (2.0 * self.width * self.width)).exp()
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.amplitude.is_finite() && self.center.is_finite() && self.width.is_finite()) {
            return Err(Error::ConfigInvalid(format!("{name}: non-finite field")));
        }
        if self.width <= 0.0 {
            return Err(Error::ConfigInvalid(format!("{name}: width must be positive")));
        }
        Ok(())
    }
}

/// `A * exp(-(t - t_c)^2 / (2 sigma^2))` at every grid point.
pub fn gaussian_wave(c: &GaussianComponent, grid: &[f64]) -> Vec<f64> {
    grid.iter().map(|&t| c.value(t)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianBeatConfig {
    pub p: GaussianComponent,
    pub q: GaussianComponent,
    pub r: GaussianComponent,
    pub s: GaussianComponent,
    pub t: GaussianComponent,
    /// Seconds between beat onsets.
    pub beat_period: f64,
    pub n_beats: usize,
    pub fs: f64,
    /// Standard deviation of additive white noise, mV.
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for GaussianBeatConfig {
    fn default() -> Self {
        Self {
            p: GaussianComponent::new(0.15, 0.10, 0.020),
            q: GaussianComponent::new(-0.1, 0.19, 0.008),
            r: GaussianComponent::new(1.0, 0.21, 0.010),
            s: GaussianComponent::new(-0.2, 0.23, 0.008),
            t: GaussianComponent::new(0.3, 0.40, 0.035),
            beat_period: 0.8,
            n_beats: 1,
            fs: 250.0,
            noise_std: 0.0,
            seed: 0,
        }
    }
}

impl GaussianBeatConfig {
    /// Components in P, Q, R, S, T order with their mask class.
    pub fn components(&self) -> [(WaveClass, &GaussianComponent); 5] {
        [
            (WaveClass::P, &self.p),
            (WaveClass::Qrs, &self.q),
            (WaveClass::Qrs, &self.r),
            (WaveClass::Qrs, &self.s),
            (WaveClass::T, &self.t),
        ]
    }

    pub fn components_mut(&mut self) -> [&mut GaussianComponent; 5] {
        [&mut self.p, &mut self.q, &mut self.r, &mut self.s, &mut self.t]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, c) in ["P", "Q", "R", "S", "T"].iter().zip(self.components()) {
            c.1.validate(name)?;
        }
        let centers: Vec<f64> = self.components().iter().map(|(_, c)| c.center).collect();
        if centers.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::ConfigInvalid(
                "centers must be strictly ordered P < Q < R < S < T".into(),
            ));
        }
        if !(self.beat_period > self.t.center + MASK_SIGMAS * self.t.width) {
            return Err(Error::ConfigInvalid(format!(
                "beat period {} s does not clear the T wave's 3-sigma support ({} s)",
                self.beat_period,
                self.t.center + MASK_SIGMAS * self.t.width
            )));
        }
        if self.n_beats == 0 {
            return Err(Error::ConfigInvalid("n_beats must be positive".into()));
        }
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return Err(Error::ConfigInvalid("fs must be positive".into()));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::ConfigInvalid("noise_std must be non-negative".into()));
        }
        Ok(())
    }

    /// Samples in the generated record.
    pub fn len(&self) -> usize {
        (self.n_beats as f64 * self.beat_period * self.fs).round().max(1.0) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Synthesizes `n_beats` tiled beats and their label mask.
pub fn synth_beat(cfg: &GaussianBeatConfig) -> Result<(SampledSignal, LabelMask)> {
    cfg.validate()?;
    let n = cfg.len();
    let fs = cfg.fs;
    let mut x = vec![0.0; n];
    let mut mask = LabelMask::background(n);
    let index_range = |lo: f64, hi: f64| -> (usize, usize) {
        let a = (lo * fs).floor().max(0.0) as usize;
        let b = ((hi * fs).ceil().max(0.0) as usize + 1).min(n);
        (a.min(n), b)
    };

    for beat in 0..cfg.n_beats {
        let onset = beat as f64 * cfg.beat_period;
        // each beat is drawn only inside its own period so tiles repeat exactly
        let first = ((onset * fs) - 1e-9).ceil().max(0.0) as usize;
        let end = (((onset + cfg.beat_period) * fs) - 1e-9).ceil().max(0.0) as usize;
        for (class, c) in cfg.components() {
            let center = onset + c.center;
            let (a, b) = index_range(center - SUPPORT_SIGMAS * c.width, center + SUPPORT_SIGMAS * c.width);
            let (a, b) = (a.max(first), b.min(end));
            let shifted = GaussianComponent { center, ..*c };
            for (i, xi) in x.iter_mut().enumerate().take(b).skip(a) {
                *xi += shifted.value(i as f64 / fs);
            }
            if c.amplitude == 0.0 {
                continue;
            }
            let half = MASK_SIGMAS * c.width;
            let (a, b) = index_range(center - half, center + half);
            for (i, label) in mask.classes_mut().iter_mut().enumerate().take(b).skip(a) {
                if (i as f64 / fs - center).abs() <= half {
                    *label = label.resolve(class);
                }
            }
        }
    }

    if cfg.noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let normal = Normal::new(0.0, cfg.noise_std)
            .map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        for xi in x.iter_mut() {
            *xi += normal.sample(&mut rng);
        }
    }
    Ok((SampledSignal::new(x, fs)?, mask))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Validation {
    pub accepted: bool,
    pub score: f64,
}

/// Compares a synthetic signal's spectrum with a reference spectrum.
pub fn validate_spectrum(
    synth: &SampledSignal,
    reference: &Spectrum,
    threshold: f64,
) -> Result<Validation> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidParameter(format!("threshold {threshold} not in [0, 1]")));
    }
    if synth.fs() != reference.fs() {
        return Err(Error::ResolutionMismatch(format!(
            "signal at {} Hz, reference at {} Hz",
            synth.fs(),
            reference.fs()
        )));
    }
    let spec = spectral::dft(synth, reference.n_fft())?;
    let score = spectral::spectral_similarity(&spec, reference)?;
    Ok(Validation { accepted: score >= threshold, score })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Adjustment {
    pub config: GaussianBeatConfig,
    pub score: f64,
    /// Greedy steps taken; 0 when the input was already accepted.
    pub iterations: usize,
}

/// Greedy coordinate search over lobe widths and amplitudes until the
/// synthetic spectrum matches `reference` at `threshold`.
///
/// Each step tries scaling every width by 0.9 and 1.1 and every amplitude by
/// 0.95 and 1.05, and keeps the single change that raises the similarity the
/// most. The search stops early when no change improves the score.
pub fn adjust_until_valid(
    cfg: &GaussianBeatConfig,
    reference: &Spectrum,
    threshold: f64,
    max_iters: usize,
) -> Result<Adjustment> {
    if max_iters == 0 {
        return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
    }
    let score_of = |c: &GaussianBeatConfig| -> Result<Validation> {
        let (signal, _) = synth_beat(c)?;
        validate_spectrum(&signal, reference, threshold)
    };

    let mut current = cfg.clone();
    let mut v = score_of(&current)?;
    if v.accepted {
        return Ok(Adjustment { config: current, score: v.score, iterations: 0 });
    }
    for iteration in 1..=max_iters {
        let mut best: Option<(GaussianBeatConfig, Validation)> = None;
        for lobe in 0..5 {
            for (is_width, factor) in [(true, 0.9), (true, 1.1), (false, 0.95), (false, 1.05)] {
                let mut candidate = current.clone();
                let c = &mut candidate.components_mut()[lobe];
                if is_width {
                    c.width *= factor;
                } else {
                    c.amplitude *= factor;
                }
                if candidate.validate().is_err() {
                    continue;
                }
                let cv = score_of(&candidate)?;
                if cv.score > best.as_ref().map_or(v.score, |(_, b)| b.score) {
                    best = Some((candidate, cv));
                }
            }
        }
        match best {
            Some((c, cv)) => {
                current = c;
                v = cv;
                if v.accepted {
                    return Ok(Adjustment { config: current, score: v.score, iterations: iteration });
                }
            }
            None => return Err(Error::NotConverged { best_score: v.score, iterations: iteration }),
        }
    }
    Err(Error::NotConverged { best_score: v.score, iterations: max_iters })
}

/// Settings for a corpus of independently perturbed synthetic records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub base: GaussianBeatConfig,
    pub records: usize,
    pub beats_per_record: usize,
    pub noise_std: f64,
    /// Relative jitter applied per record to amplitudes and widths; centres
    /// move by up to `jitter * 0.1` s, one shift per wave.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            base: GaussianBeatConfig::default(),
            records: 20,
            beats_per_record: 10,
            noise_std: 0.05,
            jitter: 0.1,
            seed: 0,
        }
    }
}

/// A named signal with its ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub name: String,
    pub signal: SampledSignal,
    pub mask: LabelMask,
}

/// Generates `records` synthetic records; every record has the same length.
pub fn synth_corpus(cfg: &CorpusConfig) -> Result<Vec<Record>> {
    if cfg.records == 0 || cfg.beats_per_record == 0 {
        return Err(Error::ConfigInvalid("corpus needs at least one record and beat".into()));
    }
    if !(0.0..0.5).contains(&cfg.jitter) {
        return Err(Error::ConfigInvalid(format!("jitter {} not in [0, 0.5)", cfg.jitter)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.records);
    for i in 0..cfg.records {
        let mut beat = cfg.base.clone();
        beat.n_beats = cfg.beats_per_record;
        beat.noise_std = cfg.noise_std;
        beat.seed = rng.gen();
        let j = cfg.jitter;
        let shifts = [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
        for (k, c) in beat.components_mut().into_iter().enumerate() {
            let group = match k {
                0 => 0,
                4 => 2,
                _ => 1,
            };
            c.amplitude *= 1.0 + j * rng.gen_range(-1.0..=1.0);
            c.width *= 1.0 + j * rng.gen_range(-1.0..=1.0);
            c.center += shifts[group] * j * 0.1;
        }
        let beat = if beat.validate().is_ok() {
            beat
        } else {
            GaussianBeatConfig {
                n_beats: cfg.beats_per_record,
                noise_std: cfg.noise_std,
                seed: beat.seed,
                ..cfg.base.clone()
            }
        };
        let (signal, mask) = synth_beat(&beat)?;
        out.push(Record { name: format!("synth_{i:04}"), signal, mask });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_wave_examples() {
        let grid: Vec<f64> = (0..10).map(|i| i as f64 * 0.01).collect();
        let zero = gaussian_wave(&GaussianComponent::new(0.0, 0.05, 0.01), &grid);
        assert!(zero.iter().all(|&v| v == 0.0));

        let c = GaussianComponent::new(1.3, 0.05, 0.01);
        let w = gaussian_wave(&c, &grid);
        assert_eq!(w[5], 1.3);

        let c = GaussianComponent::new(1.0, 0.2, 0.01);
        let v = gaussian_wave(&c, &[0.21])[0];
        assert!((v - (-0.5f64).exp()).abs() < 1e-12);
        assert!((v - 0.60653).abs() < 1e-5);
    }

    #[test]
    fn empty_beat() {
        let mut cfg = GaussianBeatConfig::default();
        for c in cfg.components_mut() {
            c.amplitude = 0.0;
        }
        let (s, m) = synth_beat(&cfg).unwrap();
        assert!(s.samples().iter().all(|&v| v == 0.0));
        assert_eq!(m.count(WaveClass::Background), m.len());
    }

    #[test]
    fn default_length_and_mask() {
        let cfg = GaussianBeatConfig::default();
        let (s, m) = synth_beat(&cfg).unwrap();
        assert_eq!(s.len(), 200);
        assert_eq!(m.len(), 200);
        // QRS spans 0.166..=0.254 s
        assert_eq!(m.classes()[50], WaveClass::Qrs);
        assert_eq!(m.classes()[25], WaveClass::P);
        assert_eq!(m.classes()[100], WaveClass::T);
        assert_eq!(m.classes()[150], WaveClass::Background);
    }

    #[test]
    fn config_invariants() {
        let mut cfg = GaussianBeatConfig::default();
        cfg.q.center = 0.25;
        assert!(matches!(synth_beat(&cfg), Err(Error::ConfigInvalid(_))));
        let mut cfg = GaussianBeatConfig::default();
        cfg.beat_period = 0.5;
        assert!(matches!(synth_beat(&cfg), Err(Error::ConfigInvalid(_))));
        let mut cfg = GaussianBeatConfig::default();
        cfg.r.width = 0.0;
        assert!(matches!(synth_beat(&cfg), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn seeded_noise_is_deterministic() {
        let cfg = GaussianBeatConfig { noise_std: 0.05, seed: 11, n_beats: 3, ..Default::default() };
        let (a, _) = synth_beat(&cfg).unwrap();
        let (b, _) = synth_beat(&cfg).unwrap();
        assert_eq!(a, b);
        let (c, _) = synth_beat(&GaussianBeatConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn threshold_bounds() {
        let (s, _) = synth_beat(&GaussianBeatConfig::default()).unwrap();
        let reference = spectral::dft(&s, 512).unwrap();
        assert!(validate_spectrum(&s, &reference, 1.5).is_err());
        let v = validate_spectrum(&s, &reference, 0.0).unwrap();
        assert!(v.accepted);
    }

    #[test]
    fn corpus_records_share_length() {
        let cfg = CorpusConfig { records: 5, beats_per_record: 3, ..Default::default() };
        let corpus = synth_corpus(&cfg).unwrap();
        assert_eq!(corpus.len(), 5);
        assert!(corpus.iter().all(|r| r.signal.len() == 600 && r.mask.len() == 600));
        assert_ne!(corpus[0].signal, corpus[1].signal);
        assert_eq!(corpus, synth_corpus(&cfg).unwrap());
    }
}
