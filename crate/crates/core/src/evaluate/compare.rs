//! Preprocessing comparison: one model per (method, wave, seed), metrics on
//! a held-out split, seed-paired significance against the raw baseline.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::{
    chunk, forward_batch, softmax_cross_entropy, train, Mode, ModelConfig, ModelParams, Sample, TrainConfig,
    WINDOW_LEN,
};
use crate::signal::{bandpass, normalize, Conditioning, LabelMask, SampledSignal, WaveClass};
use crate::spectral::{segment_spectrum, Spectrum, DEFAULT_N_FFT};
use crate::synth::Record;
use crate::transforms::{Method, Preprocessing};

use super::metrics::{segmentation_metrics, SegmentationMetrics};
use super::stats::paired_t_test;
use super::timing::{host_descriptor, time_inference, time_preprocessing};

/// Everything that determines a comparison run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub methods: Vec<Method>,
    pub waves: Vec<WaveClass>,
    pub seeds: Vec<u64>,
    /// Transform parameters; the method field is replaced per run.
    pub preprocessing: Preprocessing,
    pub conditioning: Conditioning,
    pub model: ModelConfig,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Training inputs are cut into windows of at most this many samples.
    pub train_window: usize,
    pub test_fraction: f64,
    pub split_seed: u64,
    pub timing_repeats: usize,
    pub n_fft: usize,
    /// Concurrent training runs; 1 runs everything on the calling thread.
    pub jobs: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            waves: WaveClass::WAVES.to_vec(),
            seeds: vec![0, 1, 2],
            preprocessing: Preprocessing::default(),
            conditioning: Conditioning::default(),
            model: ModelConfig::full(),
            learning_rate: 3e-3,
            epochs: 3,
            batch_size: 4,
            train_window: 500,
            test_fraction: 0.2,
            split_seed: 0,
            timing_repeats: 3,
            n_fft: DEFAULT_N_FFT,
            jobs: 1,
        }
    }
}

impl CompareConfig {
    fn validate(&self) -> Result<()> {
        if self.seeds.len() < 3 {
            return Err(Error::InsufficientSeeds(self.seeds.len()));
        }
        if self.methods.is_empty() || self.waves.is_empty() {
            return Err(Error::ConfigInvalid("methods and waves must be non-empty".into()));
        }
        if self.waves.contains(&WaveClass::Background) {
            return Err(Error::ConfigInvalid("waves must be drawn from P, QRS, T".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::ConfigInvalid(format!("test_fraction {} not in (0, 1)", self.test_fraction)));
        }
        if self.train_window == 0 || self.jobs == 0 {
            return Err(Error::ConfigInvalid("train_window and jobs must be positive".into()));
        }
        Ok(())
    }

    fn train_config(&self, method: Method, wave: WaveClass, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
            target_wave: wave,
            preprocessing: method,
        }
    }
}

/// Metrics of one trained model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub method: Method,
    pub wave: WaveClass,
    pub seed: u64,
    pub train: SegmentationMetrics,
    pub test: SegmentationMetrics,
    pub train_loss: f64,
    pub test_loss: f64,
    pub inference_ms: f64,
    pub preprocess_ms: f64,
    pub effective_params: String,
    pub loss_curve: Vec<f64>,
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

/// Seed-aggregated metrics for one (method, wave).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub method: Method,
    pub wave: WaveClass,
    pub seeds: usize,
    pub train_accuracy: MeanStd,
    pub test_accuracy: MeanStd,
    pub test_iou: MeanStd,
    pub test_f1: MeanStd,
    pub train_loss: MeanStd,
    pub test_loss: MeanStd,
    pub inference_ms: MeanStd,
    pub preprocess_ms: MeanStd,
    pub effective_params: String,
    /// Paired t-test of per-seed test accuracy against raw; absent for raw
    /// itself or when raw is not among the methods.
    pub p_value_vs_raw: Option<f64>,
}

/// Averaged per-wave spectrum of the preprocessed corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveSpectrum {
    pub method: Method,
    pub wave: WaveClass,
    pub spectrum: Spectrum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub config: CompareConfig,
    pub host: String,
    pub train_records: Vec<String>,
    pub test_records: Vec<String>,
    pub runs: Vec<RunResult>,
    pub aggregates: Vec<Aggregate>,
    pub spectra: Vec<WaveSpectrum>,
}

/// Column order of `report.csv`.
pub const REPORT_COLUMNS: [&str; 23] = [
    "row_type",
    "method",
    "wave",
    "seed",
    "n_seeds",
    "train_accuracy_pct",
    "test_accuracy_pct",
    "test_accuracy_pct_std",
    "test_iou",
    "test_iou_std",
    "test_f1",
    "test_f1_std",
    "train_loss",
    "test_loss",
    "inference_ms",
    "preprocess_ms",
    "p_value_vs_raw",
    "effective_params",
    "learning_rate",
    "epochs",
    "batch_size",
    "split_seed",
    "host",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl EvalReport {
    pub fn run(&self, method: Method, wave: WaveClass, seed: u64) -> Option<&RunResult> {
        self.runs.iter().find(|r| r.method == method && r.wave == wave && r.seed == seed)
    }

    pub fn aggregate(&self, method: Method, wave: WaveClass) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.method == method && a.wave == wave)
    }

    /// One `run` row per trained model followed by one `mean` row per
    /// (method, wave).
    pub fn write_report_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", REPORT_COLUMNS.join(","))?;
        let c = &self.config;
        let tail = format!("{},{},{},{},{}", c.learning_rate, c.epochs, c.batch_size, c.split_seed, self.host);
        for r in &self.runs {
            writeln!(
                w,
                "run,{},{},{},1,{},{},,{},,{},,{},{},{},{},,{},{}",
                r.method,
                r.wave,
                r.seed,
                100.0 * r.train.accuracy,
                100.0 * r.test.accuracy,
                r.test.iou,
                r.test.f1,
                r.train_loss,
                r.test_loss,
                r.inference_ms,
                r.preprocess_ms,
                r.effective_params,
                tail
            )?;
        }
        for a in &self.aggregates {
            writeln!(
                w,
                "mean,{},{},all,{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                a.method,
                a.wave,
                a.seeds,
                100.0 * a.train_accuracy.mean,
                100.0 * a.test_accuracy.mean,
                100.0 * a.test_accuracy.std,
                a.test_iou.mean,
                a.test_iou.std,
                a.test_f1.mean,
                a.test_f1.std,
                a.train_loss.mean,
                a.test_loss.mean,
                a.inference_ms.mean,
                a.preprocess_ms.mean,
                opt(a.p_value_vs_raw),
                a.effective_params,
                tail
            )?;
        }
        Ok(())
    }

    /// `method,wave,seed,epoch,loss` with 1-based epochs.
    pub fn write_loss_curves_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "method,wave,seed,epoch,loss")?;
        for r in &self.runs {
            for (e, l) in r.loss_curve.iter().enumerate() {
                writeln!(w, "{},{},{},{},{}", r.method, r.wave, r.seed, e + 1, l)?;
            }
        }
        Ok(())
    }

    /// `method,wave,freq_hz,magnitude`.
    pub fn write_segment_spectra_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "method,wave,freq_hz,magnitude")?;
        for s in &self.spectra {
            for (f, m) in s.spectrum.freqs().iter().zip(s.spectrum.mags()) {
                writeln!(w, "{},{},{},{}", s.method, s.wave, f, m)?;
            }
        }
        Ok(())
    }
}

/// Resamples, band-passes, transforms and z-normalizes a signal; the mask is
/// decimated with the same stride.
pub fn prepare_record(
    signal: &SampledSignal,
    mask: &LabelMask,
    conditioning: &Conditioning,
    pre: &Preprocessing,
) -> Result<(SampledSignal, LabelMask)> {
    if mask.len() != signal.len() {
        return Err(Error::LengthMismatch(signal.len(), mask.len()));
    }
    let ratio = signal.fs() / conditioning.target_fs;
    let k = ratio.round();
    if (ratio - k).abs() > 1e-9 || k < 1.0 {
        return Err(Error::NonIntegerFactor { fs: signal.fs(), target_fs: conditioning.target_fs });
    }
    let k = k as usize;
    let decimated = signal.samples().iter().step_by(k).copied().collect();
    let mask = LabelMask::new(mask.classes().iter().step_by(k).copied().collect());
    let s = SampledSignal::new(decimated, conditioning.target_fs)?;
    let s = bandpass(&s, conditioning.band_lo, conditioning.band_hi)?;
    let s = pre.apply(&s)?;
    Ok((normalize(&s)?, mask))
}

struct Prepared {
    signal: SampledSignal,
    mask: LabelMask,
}

/// Windows of at most `window` samples with binary targets for `wave`.
pub fn windowed_samples<'a, I>(records: I, wave: WaveClass, window: usize) -> Vec<Sample>
where
    I: IntoIterator<Item = (&'a SampledSignal, &'a LabelMask)>,
{
    let mut out = Vec::new();
    for (signal, mask) in records {
        let target = mask.binary(wave);
        for (s, e) in chunk(signal.len(), window) {
            out.push(Sample { input: signal.samples()[s..e].to_vec(), target: target[s..e].to_vec() });
        }
    }
    out
}

fn samples_for(records: &[&Prepared], wave: WaveClass, window: usize) -> Vec<Sample> {
    windowed_samples(records.iter().map(|r| (&r.signal, &r.mask)), wave, window)
}

/// Eval-mode loss and metrics pooled over every timestep of `samples`.
pub fn evaluate_samples(params: &ModelParams, samples: &[Sample]) -> Result<(f64, SegmentationMetrics)> {
    let mut by_len: BTreeMap<usize, Vec<&Sample>> = BTreeMap::new();
    for s in samples {
        by_len.entry(s.input.len()).or_default().push(s);
    }
    let (mut pred, mut truth) = (Vec::new(), Vec::new());
    let mut loss_sum = 0.0;
    for group in by_len.values() {
        for batch in group.chunks(8) {
            let inputs: Vec<&[f64]> = batch.iter().map(|s| s.input.as_slice()).collect();
            let targets: Vec<u8> = batch.iter().flat_map(|s| s.target.iter().copied()).collect();
            let logits = forward_batch(params, &inputs, Mode::Eval)?;
            let (loss, _) = softmax_cross_entropy(&logits, &targets, false)?;
            loss_sum += loss * targets.len() as f64;
            pred.extend(logits.argmax());
            truth.extend(targets);
        }
    }
    let metrics = segmentation_metrics(&pred, &truth)?;
    Ok((loss_sum / truth.len().max(1) as f64, metrics))
}

/// Record indices for (train, test) after a seeded shuffle.
pub fn split_records(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let n_test = ((n as f64 * test_fraction).round() as usize).max(1);
    if n < 2 || n_test >= n {
        return Err(Error::EmptyDataset);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = idx.split_off(n - n_test);
    Ok((idx, test))
}

struct MethodData {
    pre: Preprocessing,
    records: Vec<Prepared>,
}

fn run_one(
    cfg: &CompareConfig,
    data: &MethodData,
    raw_test: &SampledSignal,
    split: &(Vec<usize>, Vec<usize>),
    wave: WaveClass,
    seed: u64,
) -> Result<RunResult> {
    let method = data.pre.method;
    let train_recs: Vec<&Prepared> = split.0.iter().map(|&i| &data.records[i]).collect();
    let test_recs: Vec<&Prepared> = split.1.iter().map(|&i| &data.records[i]).collect();
    let train_set = samples_for(&train_recs, wave, cfg.train_window);
    let outcome = train(&cfg.train_config(method, wave, seed), cfg.model, &train_set)?;
    let params = outcome.params;

    let (train_loss, train) = evaluate_samples(&params, &samples_for(&train_recs, wave, WINDOW_LEN))?;
    let test_set = samples_for(&test_recs, wave, WINDOW_LEN);
    let (test_loss, test) = evaluate_samples(&params, &test_set)?;

    let inference = time_inference(&params, &test_set[0].input, cfg.timing_repeats)?;
    let preprocess = time_preprocessing(&data.pre, raw_test, cfg.timing_repeats)?;
    Ok(RunResult {
        method,
        wave,
        seed,
        train,
        test,
        train_loss,
        test_loss,
        inference_ms: inference.median_ms,
        preprocess_ms: preprocess.median_ms,
        effective_params: data.pre.effective_params(cfg.conditioning.target_fs),
        loss_curve: outcome.loss_curve,
    })
}

fn mean_spectra(method: Method, records: &[Prepared], n_fft: usize) -> Result<Vec<WaveSpectrum>> {
    let mut out = Vec::new();
    for wave in WaveClass::WAVES {
        let mut acc: Option<Vec<f64>> = None;
        let mut count = 0usize;
        let mut fs = 0.0;
        for r in records {
            match segment_spectrum(&r.signal, &r.mask, wave, n_fft) {
                Ok(s) => {
                    let a = acc.get_or_insert_with(|| vec![0.0; s.mags().len()]);
                    a.iter_mut().zip(s.mags()).for_each(|(x, y)| *x += y);
                    count += 1;
                    fs = s.fs();
                }
                Err(Error::ClassAbsent(_)) => {}
                Err(e) => return Err(e),
            }
        }
        if let Some(mut a) = acc {
            a.iter_mut().for_each(|x| *x /= count as f64);
            out.push(WaveSpectrum { method, wave, spectrum: Spectrum::from_magnitudes(a, fs, n_fft)? });
        }
    }
    Ok(out)
}

fn aggregate(cfg: &CompareConfig, runs: &[RunResult], method: Method, wave: WaveClass) -> Result<Aggregate> {
    let rows: Vec<&RunResult> =
        cfg.seeds.iter().filter_map(|&s| runs.iter().find(|r| r.method == method && r.wave == wave && r.seed == s)).collect();
    let col = |f: &dyn Fn(&RunResult) -> f64| MeanStd::of(&rows.iter().map(|r| f(r)).collect::<Vec<_>>());
    let p_value_vs_raw = if method != Method::Raw && cfg.methods.contains(&Method::Raw) {
        let acc: Vec<f64> = rows.iter().map(|r| r.test.accuracy).collect();
        let raw: Vec<f64> = cfg
            .seeds
            .iter()
            .filter_map(|&s| runs.iter().find(|r| r.method == Method::Raw && r.wave == wave && r.seed == s))
            .map(|r| r.test.accuracy)
            .collect();
        Some(paired_t_test(&acc, &raw)?.1)
    } else {
        None
    };
    Ok(Aggregate {
        method,
        wave,
        seeds: rows.len(),
        train_accuracy: col(&|r| r.train.accuracy),
        test_accuracy: col(&|r| r.test.accuracy),
        test_iou: col(&|r| r.test.iou),
        test_f1: col(&|r| r.test.f1),
        train_loss: col(&|r| r.train_loss),
        test_loss: col(&|r| r.test_loss),
        inference_ms: col(&|r| r.inference_ms),
        preprocess_ms: col(&|r| r.preprocess_ms),
        effective_params: rows.first().map(|r| r.effective_params.clone()).unwrap_or_default(),
        p_value_vs_raw,
    })
}

/// Runs the full comparison. `on_run` is called as each model finishes
/// (in completion order when `jobs > 1`).
pub fn compare_preprocessing_with<F>(records: &[Record], cfg: &CompareConfig, on_run: F) -> Result<EvalReport>
where
    F: Fn(&RunResult) + Sync,
{
    cfg.validate()?;
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let split = split_records(records.len(), cfg.test_fraction, cfg.split_seed)?;
    let raw_test = {
        let r = &records[split.1[0]];
        prepare_record(&r.signal, &r.mask, &cfg.conditioning, &Preprocessing::new(Method::Raw))?.0
    };

    let mut prepared = Vec::with_capacity(cfg.methods.len());
    let mut spectra = Vec::new();
    for &method in &cfg.methods {
        let pre = Preprocessing { method, ..cfg.preprocessing };
        let recs = records
            .iter()
            .map(|r| prepare_record(&r.signal, &r.mask, &cfg.conditioning, &pre).map(|(signal, mask)| Prepared { signal, mask }))
            .collect::<Result<Vec<_>>>()?;
        spectra.extend(mean_spectra(method, &recs, cfg.n_fft)?);
        prepared.push(MethodData { pre, records: recs });
    }

    let mut jobs = Vec::new();
    for (m, _) in cfg.methods.iter().enumerate() {
        for &wave in &cfg.waves {
            for &seed in &cfg.seeds {
                jobs.push((m, wave, seed));
            }
        }
    }
    let run = |&(m, wave, seed): &(usize, WaveClass, u64)| {
        let r = run_one(cfg, &prepared[m], &raw_test, &split, wave, seed)?;
        on_run(&r);
        Ok(r)
    };
    let runs: Vec<RunResult> = if cfg.jobs == 1 {
        jobs.iter().map(run).collect::<Result<_>>()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(|| jobs.par_iter().map(run).collect::<Result<_>>())?
    };

    let mut aggregates = Vec::new();
    for &method in &cfg.methods {
        for &wave in &cfg.waves {
            aggregates.push(aggregate(cfg, &runs, method, wave)?);
        }
    }
    Ok(EvalReport {
        config: cfg.clone(),
        host: host_descriptor(),
        train_records: split.0.iter().map(|&i| records[i].name.clone()).collect(),
        test_records: split.1.iter().map(|&i| records[i].name.clone()).collect(),
        runs,
        aggregates,
        spectra,
    })
}

pub fn compare_preprocessing(records: &[Record], cfg: &CompareConfig) -> Result<EvalReport> {
    compare_preprocessing_with(records, cfg, |_| {})
}
