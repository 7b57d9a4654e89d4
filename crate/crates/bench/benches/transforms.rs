use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use pqrst::signal::bandpass;
use pqrst::spectral::dft;
use pqrst::synth::synth_beat;
use pqrst::transforms::{euler_diff, gl_smooth, hilbert};
use pqrst::{GaussianBeatConfig, SampledSignal};

fn signal() -> SampledSignal {
    synth_beat(&GaussianBeatConfig { n_beats: 10, noise_std: 0.05, ..Default::default() }).unwrap().0
}

fn transforms(c: &mut Criterion) {
    let x = signal();
    let mut g = c.benchmark_group("transforms");
    g.bench_function("hilbert", |b| b.iter(|| hilbert(black_box(&x)).unwrap()));
    g.bench_function("euler", |b| b.iter(|| euler_diff(black_box(&x), 0.005).unwrap()));
    for nodes in [3, 5, 10] {
        g.bench_with_input(BenchmarkId::new("gauss_legendre", nodes), &nodes, |b, &n| {
            b.iter(|| gl_smooth(black_box(&x), 0.04, n).unwrap())
        });
    }
    g.bench_function("bandpass", |b| b.iter(|| bandpass(black_box(&x), 0.5, 50.0).unwrap()));
    g.bench_function("dft_512", |b| b.iter(|| dft(black_box(&x), 512).unwrap()));
    g.finish();
}

criterion_group!(benches, transforms);
criterion_main!(benches);
