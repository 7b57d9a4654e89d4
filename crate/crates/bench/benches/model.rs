use criterion::{black_box, criterion_group, criterion_main, Criterion};
use pqrst::neural::{loss_and_grad, model_forward, BatchRef, Mode, ModelConfig, ModelParams};

fn model(c: &mut Criterion) {
    let params = ModelParams::init(ModelConfig::full(), 0).unwrap();
    let input: Vec<f64> = (0..3500).map(|i| (i as f64 * 0.05).sin()).collect();
    let mut g = c.benchmark_group("model");
    g.sample_size(10);
    g.bench_function("forward_3500", |b| b.iter(|| model_forward(&params, black_box(&input), Mode::Eval).unwrap()));

    let window: Vec<f64> = input[..500].to_vec();
    let target: Vec<u8> = (0..500).map(|i| u8::from(i % 200 < 25)).collect();
    let inputs: Vec<&[f64]> = vec![&window; 4];
    let targets: Vec<&[u8]> = vec![&target; 4];
    g.bench_function("train_step_4x500", |b| {
        b.iter(|| loss_and_grad(&params, BatchRef { inputs: &inputs, targets: &targets }).unwrap())
    });
    g.finish();
}

criterion_group!(benches, model);
criterion_main!(benches);
