//! Seeded mini-batch training with Adam.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::WaveClass;
use crate::transforms::Method;

use super::model::{loss_and_grad, BatchRef, ModelConfig, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub target_wave: WaveClass,
    /// Recorded for provenance; the dataset must already be transformed.
    pub preprocessing: Method,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 10,
            batch_size: 4,
            seed: 0,
            target_wave: WaveClass::Qrs,
            preprocessing: Method::Raw,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidParameter("learning_rate must be positive".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidParameter("epochs and batch_size must be positive".into()));
        }
        if self.target_wave == WaveClass::Background {
            return Err(Error::InvalidParameter("target wave must be P, QRS or T".into()));
        }
        Ok(())
    }
}

/// One model input with its binary per-timestep target.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub target: Vec<u8>,
}

/// Adaptive-moment optimizer state.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(params: &ModelParams, learning_rate: f64) -> Self {
        let shapes: Vec<usize> = params.trainable().iter().map(|t| t.data.len()).collect();
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &ModelParams) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        let grads = grads.trainable();
        for (((p, g), m), v) in params.trainable_mut().into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.len() {
                let gi = g.data[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                p[i] -= self.learning_rate * mhat / (vhat.sqrt() + self.eps);
            }
        }
    }
}

/// Trained parameters and the mean training loss of every epoch.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub loss_curve: Vec<f64>,
}

/// Groups sample indices into batches of equal-length sequences after a
/// seeded shuffle; batch order is shuffled again.
fn make_batches(dataset: &[Sample], batch_size: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(rng);
    // stable: keeps the shuffled order within each length
    order.sort_by_key(|&i| dataset[i].input.len());
    let mut batches = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    for i in order {
        let same_len = current.first().map_or(true, |&j| dataset[j].input.len() == dataset[i].input.len());
        if !same_len || current.len() == batch_size {
            batches.push(std::mem::take(&mut current));
        }
        current.push(i);
    }
    if !current.is_empty() {
        batches.push(current);
    }
    batches.shuffle(rng);
    batches
}

/// Trains a freshly initialized model. Deterministic for a given seed.
pub fn train(cfg: &TrainConfig, model: ModelConfig, dataset: &[Sample]) -> Result<TrainOutcome> {
    let params = ModelParams::init(model, cfg.seed)?;
    train_from(cfg, params, dataset)
}

/// Continues training from `params`.
pub fn train_from(cfg: &TrainConfig, mut params: ModelParams, dataset: &[Sample]) -> Result<TrainOutcome> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for s in dataset {
        if s.input.len() != s.target.len() || s.input.is_empty() {
            return Err(Error::LengthMismatch(s.input.len(), s.target.len()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5348_5546_464c_4531);
    let mut adam = Adam::new(&params, cfg.learning_rate);
    let mut curve = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let mut total = 0.0;
        let mut weight = 0usize;
        for batch in make_batches(dataset, cfg.batch_size, &mut rng) {
            let inputs: Vec<&[f64]> = batch.iter().map(|&i| dataset[i].input.as_slice()).collect();
            let targets: Vec<&[u8]> = batch.iter().map(|&i| dataset[i].target.as_slice()).collect();
            let out = loss_and_grad(&params, BatchRef { inputs: &inputs, targets: &targets })?;
            let rows: usize = inputs.iter().map(|x| x.len()).sum();
            total += out.loss * rows as f64;
            weight += rows;
            adam.step(&mut params, &out.grads);
            params.update_running_stats(&out.stats);
        }
        curve.push(total / weight as f64);
    }
    Ok(TrainOutcome { params, loss_curve: curve })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_dataset() -> Vec<Sample> {
        (0..5)
            .map(|k| {
                let input: Vec<f64> = (0..24).map(|i| ((i + k) as f64 * 0.5).sin()).collect();
                let target = input.iter().map(|&v| u8::from(v > 0.5)).collect();
                Sample { input, target }
            })
            .collect()
    }

    #[test]
    fn empty_dataset() {
        let cfg = TrainConfig::default();
        assert!(matches!(train(&cfg, ModelConfig::tiny(), &[]), Err(Error::EmptyDataset)));
    }

    #[test]
    fn deterministic_and_decreasing_on_toy_problem() {
        let cfg = TrainConfig { epochs: 30, batch_size: 2, learning_rate: 1e-2, ..Default::default() };
        let a = train(&cfg, ModelConfig::tiny(), &toy_dataset()).unwrap();
        let b = train(&cfg, ModelConfig::tiny(), &toy_dataset()).unwrap();
        assert_eq!(a.loss_curve.len(), 30);
        assert!(a.loss_curve.iter().zip(&b.loss_curve).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_eq!(a.params, b.params);
        assert!(a.loss_curve.last().unwrap() < &a.loss_curve[0]);
    }

    #[test]
    fn batches_never_mix_lengths() {
        let mut data = toy_dataset();
        data.push(Sample { input: vec![0.0; 10], target: vec![0; 10] });
        data.push(Sample { input: vec![0.0; 10], target: vec![0; 10] });
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let batches = make_batches(&data, 3, &mut rng);
        let mut seen: Vec<usize> = batches.iter().flatten().copied().collect();
        seen.sort();
        assert_eq!(seen, (0..7).collect::<Vec<_>>());
        for b in batches {
            assert!(b.len() <= 3);
            assert!(b.iter().all(|&i| data[i].input.len() == data[b[0]].input.len()));
        }
    }
}
