use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use pqrst::evaluate::{
    compare_preprocessing_with, evaluate_samples, host_descriptor, prepare_record, time_inference,
    time_preprocessing, windowed_samples, CompareConfig,
};
use pqrst::ingest::{export_mask, load_record_dir, rasterize, save_record, AnnotationSet};
use pqrst::neural::{
    forward_batch, load_checkpoint, save_checkpoint, train, Mode, TrainConfig, WINDOW_LEN,
};
use pqrst::signal::Conditioning;
use pqrst::spectral::{dft, dominant_frequency, segment_spectrum};
use pqrst::synth::{synth_beat, synth_corpus, CorpusConfig};
use pqrst::transforms::hilbert;
use pqrst::{GaussianBeatConfig, LabelMask, Method, Preprocessing, Record, SampledSignal, WaveClass};
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::manifest::RunManifest;

/// A failure tagged with the pipeline stage that produced it.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub message: String,
}

pub type CmdResult<T> = std::result::Result<T, StageError>;

trait AtStage<T> {
    fn at(self, stage: &'static str) -> CmdResult<T>;
}

impl<T, E: std::fmt::Display> AtStage<T> for std::result::Result<T, E> {
    fn at(self, stage: &'static str) -> CmdResult<T> {
        self.map_err(|e| StageError { stage, message: e.to_string() })
    }
}

/// Collects written files and writes the manifest last.
struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path) -> CmdResult<Self> {
        std::fs::create_dir_all(dir).at("output")?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    fn create(&mut self, name: &str) -> CmdResult<BufWriter<File>> {
        let p = self.path(name);
        File::create(&p).map(BufWriter::new).at("output")
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CmdResult<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value).at("output")?;
        writeln!(w).at("output")?;
        w.flush().at("output")
    }

    fn finish<C: Serialize>(
        self,
        subcommand: &str,
        config: &C,
        seed: u64,
        inputs: Vec<PathBuf>,
        resolved: serde_json::Value,
    ) -> CmdResult<()> {
        let manifest = RunManifest::new(subcommand, config, seed, inputs, self.written, resolved).at("manifest")?;
        manifest.save(&self.dir.join("manifest.json")).at("manifest")
    }
}

fn preprocessing(method: Method, t: &TransformArgs) -> Preprocessing {
    Preprocessing { method, dt: t.dt, window: t.window, gl_nodes: t.gl_nodes }
}

fn conditioning(c: &ConditioningArgs) -> Conditioning {
    Conditioning { target_fs: c.target_fs, band_lo: c.band_lo, band_hi: c.band_hi }
}

fn corpus_config(c: &CorpusArgs, seed: u64) -> CorpusConfig {
    CorpusConfig {
        records: c.records,
        beats_per_record: c.beats,
        noise_std: c.noise_std,
        jitter: c.jitter,
        seed,
        ..Default::default()
    }
}

/// Records from `--data`, or a synthetic corpus seeded by `--seed`.
fn load_records(data: &Option<PathBuf>, corpus: &CorpusArgs, seed: u64) -> CmdResult<(Vec<Record>, Vec<PathBuf>)> {
    match data {
        Some(dir) => Ok((load_record_dir(dir).at("load")?, vec![dir.clone()])),
        None => Ok((synth_corpus(&corpus_config(corpus, seed)).at("synth")?, Vec::new())),
    }
}

fn write_signal(out: &mut Outputs, name: &str, s: &SampledSignal) -> CmdResult<()> {
    let w = out.create(name)?;
    s.write_csv(w).at("output")
}

pub fn synth(a: &SynthArgs) -> CmdResult<()> {
    let mut out = Outputs::new(&a.common.out)?;
    let base = GaussianBeatConfig { fs: a.fs, beat_period: a.beat_period, ..Default::default() };
    let cfg = CorpusConfig {
        base,
        records: a.records,
        beats_per_record: a.beats,
        noise_std: a.noise_std,
        jitter: a.jitter,
        seed: a.common.seed,
    };
    let records = synth_corpus(&cfg).at("synth")?;
    let source = format!("pqrst synth seed={}", a.common.seed);
    for r in &records {
        save_record(r, &out.dir, &source).at("output")?;
        out.written.push(out.dir.join(format!("{}.csv", r.name)));
        out.written.push(out.dir.join(format!("{}.json", r.name)));
        export_mask(&r.mask, &out.path(&format!("{}.mask.csv", r.name))).at("output")?;
    }
    out.finish("synth", a, a.common.seed, Vec::new(), json!({ "corpus": cfg }))
}

pub fn preprocess(a: &PreprocessArgs) -> CmdResult<()> {
    let mut out = Outputs::new(&a.common.out)?;
    let signal = SampledSignal::load(&a.input).at("load")?;
    let signal = if a.condition { conditioning(&a.conditioning).apply(&signal).at("condition")? } else { signal };
    let pre = preprocessing(a.method, &a.transform);
    let result = pre.apply(&signal).at("preprocess")?;
    write_signal(&mut out, "preprocessed.csv", &result)?;
    if a.method == Method::Hilbert {
        let analytic = hilbert(&signal).at("preprocess")?;
        write_signal(&mut out, "phase.csv", &analytic.phase_signal().at("preprocess")?)?;
    }
    let resolved = json!({ "effective_params": pre.effective_params(signal.fs()) });
    out.finish("preprocess", a, a.common.seed, vec![a.input.clone()], resolved)
}

pub fn fft(a: &FftArgs) -> CmdResult<()> {
    let mut out = Outputs::new(&a.common.out)?;
    let signal = SampledSignal::load(&a.input).at("load")?;
    let spec = dft(&signal, a.n_fft).at("fft")?;
    spec.write_csv(out.create("spectrum.csv")?).at("output")?;
    let nyquist = signal.fs() / 2.0;
    let mut dominant = serde_json::Map::new();
    dominant.insert("signal".into(), json!(dominant_frequency(&spec, 0.0, nyquist).at("fft")?));
    let mut inputs = vec![a.input.clone()];
    if let Some(path) = &a.annotations {
        let ann = AnnotationSet::load(path).at("load")?;
        ann.validate(signal.duration()).at("load")?;
        inputs.push(path.clone());
        let mask = rasterize(&ann, signal.fs(), signal.len());
        let mut w = out.create("segment_spectra.csv")?;
        writeln!(w, "wave,freq_hz,magnitude").at("output")?;
        for wave in WaveClass::WAVES {
            let s = match segment_spectrum(&signal, &mask, wave, a.n_fft) {
                Ok(s) => s,
                Err(pqrst::Error::ClassAbsent(_)) => continue,
                Err(e) => return Err(e).at("fft"),
            };
            for (f, m) in s.freqs().iter().zip(s.mags()) {
                writeln!(w, "{wave},{f},{m}").at("output")?;
            }
            dominant.insert(wave.name().into(), json!(dominant_frequency(&s, 0.0, nyquist).at("fft")?));
        }
        w.flush().at("output")?;
    }
    out.json("dominant_frequencies.json", &dominant)?;
    out.finish("fft", a, a.common.seed, inputs, json!({ "fs": signal.fs() }))
}

fn prepared(records: &[Record], m: &ModelArgs) -> CmdResult<Vec<(SampledSignal, LabelMask)>> {
    let pre = preprocessing(m.method, &m.transform);
    let cond = conditioning(&m.conditioning);
    records.iter().map(|r| prepare_record(&r.signal, &r.mask, &cond, &pre).at("preprocess")).collect()
}

pub fn train_cmd(a: &TrainArgs) -> CmdResult<()> {
    let mut out = Outputs::new(&a.common.out)?;
    let (records, inputs) = load_records(&a.data, &a.corpus, a.common.seed)?;
    let data = prepared(&records, &a.model)?;
    let samples = windowed_samples(data.iter().map(|(s, m)| (s, m)), a.model.wave, a.optim.train_window);
    let cfg = TrainConfig {
        learning_rate: a.optim.lr,
        epochs: a.optim.epochs,
        batch_size: a.optim.batch_size,
        seed: a.common.seed,
        target_wave: a.model.wave,
        preprocessing: a.model.method,
    };
    let outcome = train(&cfg, a.model.arch.config(), &samples).at("train")?;
    save_checkpoint(&outcome.params, &out.path("checkpoint.bin")).at("output")?;
    let mut w = out.create("loss_curve.csv")?;
    writeln!(w, "epoch,loss").at("output")?;
    for (e, l) in outcome.loss_curve.iter().enumerate() {
        writeln!(w, "{},{l}", e + 1).at("output")?;
    }
    w.flush().at("output")?;
    let resolved = json!({
        "train": cfg,
        "model": a.model.arch.config(),
        "records": records.iter().map(|r| &r.name).collect::<Vec<_>>(),
        "param_count": outcome.params.param_count(),
        "effective_params": preprocessing(a.model.method, &a.model.transform).effective_params(a.model.conditioning.target_fs),
    });
    out.finish("train", a, a.common.seed, inputs, resolved)
}

pub fn eval(a: &EvalArgs) -> CmdResult<()> {
    let mut out = Outputs::new(&a.common.out)?;
    let params = load_checkpoint(&a.checkpoint, a.model.arch.config()).at("load")?;
    let (records, mut inputs) = load_records(&a.data, &a.corpus, a.common.seed)?;
    inputs.insert(0, a.checkpoint.clone());
    let data = prepared(&records, &a.model)?;
    let samples = windowed_samples(data.iter().map(|(s, m)| (s, m)), a.model.wave, WINDOW_LEN);
    let (loss, metrics) = evaluate_samples(&params, &samples).at("eval")?;

    let pred_dir = out.dir.join("predictions");
    std::fs::create_dir_all(&pred_dir).at("output")?;
    for (r, (signal, _)) in records.iter().zip(&data) {
        let mut classes = Vec::with_capacity(signal.len());
        for (s, e) in pqrst::neural::chunk(signal.len(), WINDOW_LEN) {
            let logits = forward_batch(&params, &[&signal.samples()[s..e]], Mode::Eval).at("eval")?;
            classes.extend(logits.argmax().into_iter().map(|k| if k == 1 { a.model.wave } else { WaveClass::Background }));
        }
        let path = pred_dir.join(format!("{}.mask.csv", r.name));
        export_mask(&LabelMask::new(classes), &path).at("output")?;
        out.written.push(path);
    }

    let inference = time_inference(&params, &samples[0].input, a.repeats).at("timing")?;
    let pre = preprocessing(a.model.method, &a.model.transform);
    let conditioned = conditioning(&a.model.conditioning).apply(&records[0].signal).at("timing")?;
    let preprocess = time_preprocessing(&pre, &conditioned, a.repeats).at("timing")?;
    out.json(
        "metrics.json",
        &json!({
            "method": a.model.method,
            "wave": a.model.wave,
            "loss": loss,
            "accuracy_pct": 100.0 * metrics.accuracy,
            "iou": metrics.iou,
            "f1": metrics.f1,
            "inference_ms": inference.median_ms,
            "inference_input_len": samples[0].input.len(),
            "preprocess_ms": preprocess.median_ms,
            "effective_params": pre.effective_params(a.model.conditioning.target_fs),
            "host": inference.host,
        }),
    )?;
    out.finish("eval", a, a.common.seed, inputs, json!({ "model": a.model.arch.config() }))
}

pub fn compare(a: &CompareArgs) -> CmdResult<()> {
    let mut out = Outputs::new(&a.common.out)?;
    let (records, inputs) = load_records(&a.data, &a.corpus, a.common.seed)?;
    let cfg = CompareConfig {
        methods: a.methods.clone(),
        waves: a.waves.clone(),
        seeds: (0..a.seeds as u64).map(|k| a.common.seed + k).collect(),
        preprocessing: preprocessing(Method::Raw, &a.transform),
        conditioning: conditioning(&a.conditioning),
        model: a.arch.config(),
        learning_rate: a.optim.lr,
        epochs: a.optim.epochs,
        batch_size: a.optim.batch_size,
        train_window: a.optim.train_window,
        test_fraction: a.test_fraction,
        split_seed: a.common.seed,
        timing_repeats: a.repeats,
        n_fft: a.n_fft,
        jobs: a.jobs,
    };
    let report = compare_preprocessing_with(&records, &cfg, |r| {
        eprintln!(
            "{} {} seed {}: test accuracy {:.2}%, IoU {:.3}",
            r.method,
            r.wave,
            r.seed,
            100.0 * r.test.accuracy,
            r.test.iou
        )
    })
    .at("compare")?;
    report.write_report_csv(out.create("report.csv")?).at("output")?;
    report.write_loss_curves_csv(out.create("loss_curves.csv")?).at("output")?;
    report.write_segment_spectra_csv(out.create("segment_spectra.csv")?).at("output")?;
    out.json("report.json", &report)?;
    out.finish("compare", a, a.common.seed, inputs, json!({ "compare": cfg }))
}

pub fn plot_data(a: &PlotDataArgs) -> CmdResult<()> {
    let mut out = Outputs::new(&a.common.out)?;
    let cfg = GaussianBeatConfig { n_beats: a.beats, noise_std: a.noise_std, seed: a.common.seed, ..Default::default() };
    let (signal, mask) = synth_beat(&cfg).at("synth")?;
    let fs = signal.fs();

    let mut w = out.create("beat.csv")?;
    writeln!(w, "time_s,amplitude_mv,class").at("output")?;
    for (i, (x, c)) in signal.samples().iter().zip(mask.classes()).enumerate() {
        writeln!(w, "{},{x},{c}", i as f64 / fs).at("output")?;
    }
    w.flush().at("output")?;

    let transformed: Vec<SampledSignal> = [Method::Hilbert, Method::Euler, Method::GaussLegendre]
        .into_iter()
        .map(|m| preprocessing(m, &a.transform).apply(&signal).at("preprocess"))
        .collect::<CmdResult<_>>()?;
    let mut w = out.create("transforms.csv")?;
    writeln!(w, "time_s,raw,hilbert_envelope,euler,gauss_legendre").at("output")?;
    for i in 0..signal.len() {
        writeln!(
            w,
            "{},{},{},{},{}",
            i as f64 / fs,
            signal.samples()[i],
            transformed[0].samples()[i],
            transformed[1].samples()[i],
            transformed[2].samples()[i]
        )
        .at("output")?;
    }
    w.flush().at("output")?;

    let mut w = out.create("spectra.csv")?;
    writeln!(w, "wave,freq_hz,magnitude").at("output")?;
    let mut dominant = serde_json::Map::new();
    for wave in WaveClass::WAVES {
        let s = segment_spectrum(&signal, &mask, wave, a.n_fft).at("fft")?;
        for (f, m) in s.freqs().iter().zip(s.mags()) {
            writeln!(w, "{wave},{f},{m}").at("output")?;
        }
        dominant.insert(wave.name().into(), json!(dominant_frequency(&s, 0.0, fs / 2.0).at("fft")?));
    }
    w.flush().at("output")?;
    out.json("dominant_frequencies.json", &dominant)?;
    let resolved = json!({ "beat": cfg, "host": host_descriptor() });
    out.finish("plot-data", a, a.common.seed, Vec::new(), resolved)
}
