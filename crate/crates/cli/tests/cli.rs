use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pqrst(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pqrst"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn assert_ok(o: &Output) {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

fn read_signal(path: &Path) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("fs,"));
    lines.map(|l| l.parse().unwrap()).collect()
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_ok(&pqrst(&["synth", "--seed", "7", "--beats", "4", "--noise-std", "0.05"], out));
    }
    for name in ["synth_0000.csv", "synth_0000.json", "synth_0000.mask.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["subcommand"], "synth");
}

#[test]
fn gauss_legendre_preserves_constant_signal() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("flat.csv");
    let mut text = String::from("fs,250\n");
    for _ in 0..400 {
        text.push_str("1.5\n");
    }
    fs::write(&input, text).unwrap();
    let out = dir.path().join("out");
    let o = pqrst(&["preprocess", "--input", input.to_str().unwrap(), "--method", "gauss-legendre"], &out);
    assert_ok(&o);
    let y = read_signal(&out.join("preprocessed.csv"));
    assert_eq!(y.len(), 400);
    assert!(y.iter().all(|v| (v - 1.5).abs() <= 1e-12));
}

#[test]
fn hilbert_preprocess_writes_phase() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert_ok(&pqrst(&["synth", "--beats", "2"], &data));
    let out = dir.path().join("out");
    let input = data.join("synth_0000.csv");
    assert_ok(&pqrst(&["preprocess", "--input", input.to_str().unwrap(), "--method", "hilbert", "--condition"], &out));
    assert_eq!(read_signal(&out.join("phase.csv")).len(), read_signal(&out.join("preprocessed.csv")).len());
}

#[test]
fn compare_report_has_runs_and_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp");
    let o = pqrst(
        &[
            "compare", "--arch", "tiny", "--records", "5", "--beats", "5", "--epochs", "1", "--seeds", "3",
            "--train-window", "200", "--repeats", "3",
        ],
        &out,
    );
    assert_ok(&o);
    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    let mut lines = report.lines();
    assert!(lines.next().unwrap().starts_with("row_type,method,wave,seed"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.iter().filter(|r| r.starts_with("run,")).count(), 4 * 3 * 3);
    assert_eq!(rows.iter().filter(|r| r.starts_with("mean,")).count(), 4 * 3);
    for name in ["loss_curves.csv", "segment_spectra.csv", "report.json", "manifest.json"] {
        assert!(out.join(name).is_file(), "{name}");
    }
}

#[test]
fn train_then_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert_ok(&pqrst(&["synth", "--records", "2", "--beats", "3"], &data));
    let model = dir.path().join("model");
    let d = data.to_str().unwrap();
    assert_ok(&pqrst(&["train", "--arch", "tiny", "--data", d, "--epochs", "1", "--train-window", "200"], &model));
    let ckpt = model.join("checkpoint.bin");
    assert!(ckpt.is_file());
    let ev = dir.path().join("eval");
    assert_ok(&pqrst(
        &["eval", "--arch", "tiny", "--checkpoint", ckpt.to_str().unwrap(), "--data", d, "--repeats", "3"],
        &ev,
    ));
    let metrics: serde_json::Value = serde_json::from_slice(&fs::read(ev.join("metrics.json")).unwrap()).unwrap();
    assert!(metrics["iou"].as_f64().unwrap().is_finite());
    assert!(ev.join("predictions/synth_0000.mask.csv").is_file());
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = pqrst(&["synth", "--method", "bogus"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = pqrst(&["preprocess", "--input", "x.csv", "--method", "wavelet"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&o.stderr).trim().is_empty());
}

#[test]
fn runtime_errors_exit_one_and_name_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let o = pqrst(&["fft", "--input", dir.path().join("missing.csv").to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("fft failed at stage"), "{err}");
}

#[test]
fn help_lists_defaults() {
    let o = Command::new(env!("CARGO_BIN_EXE_pqrst")).args(["compare", "--help"]).output().unwrap();
    assert!(o.status.success());
    let help = String::from_utf8_lossy(&o.stdout);
    for d in ["[default: 250]", "[default: 512]", "[default: 0.005]", "[default: 5]", "[default: 0.5]", "[default: 50]"] {
        assert!(help.contains(d), "missing {d}");
    }
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("env_out");
    let o = Command::new(env!("CARGO_BIN_EXE_pqrst"))
        .args(["synth", "--seed", "3"])
        .env("PQRST_OUT_DIR", &out)
        .output()
        .unwrap();
    assert_ok(&o);
    assert!(out.join("synth_0000.csv").is_file());
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 3);
}

#[test]
fn plot_data_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&pqrst(&["plot-data"], dir.path()));
    let transforms = fs::read_to_string(dir.path().join("transforms.csv")).unwrap();
    assert!(transforms.starts_with("time_s,raw,hilbert_envelope,euler,gauss_legendre"));
    assert!(dir.path().join("dominant_frequencies.json").is_file());
}
