//! The ConvBiLSTM segmenter: three conv/batch-norm/ReLU blocks, a
//! bidirectional LSTM and a per-timestep linear head.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::layers::{
    bn_backward, bn_forward, conv_backward, conv_forward, linear_backward, linear_forward,
    relu_backward, relu_in_place, BatchNormParams, BatchStats, BnCache, Conv1dParams,
    LinearParams, Mode, BN_EPS,
};
use super::lstm::{concat_directions, lstm_backward, lstm_forward, split_directions, LstmCache, LstmParams};

/// Canonical window length of one model input.
pub const WINDOW_LEN: usize = 3500;

/// Learnable scalars in the reference architecture.
pub const FULL_PARAM_COUNT: usize = 520_322;

/// Layer sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub conv_channels: [usize; 3],
    pub kernels: [usize; 3],
    pub hidden: usize,
    pub classes: usize,
}

impl ModelConfig {
    /// 64/128/256 filters with kernels 5/3/3, 128 hidden units per
    /// direction, two output classes.
    pub const fn full() -> Self {
        Self { conv_channels: [64, 128, 256], kernels: [5, 3, 3], hidden: 128, classes: 2 }
    }

    /// Small variant used for gradient checks.
    pub const fn tiny() -> Self {
        Self { conv_channels: [2, 3, 4], kernels: [5, 3, 3], hidden: 4, classes: 2 }
    }

    fn validate(&self) -> Result<()> {
        if self.kernels.iter().any(|k| k % 2 == 0)
            || self.conv_channels.contains(&0)
            || self.hidden == 0
            || self.classes < 2
        {
            return Err(Error::ShapeMismatch(format!("invalid model config {self:?}")));
        }
        Ok(())
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::full()
    }
}

/// All tensors of the segmenter.
///
/// The same type doubles as the gradient container, in which case the
/// batch-norm running statistics are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub convs: [Conv1dParams; 3],
    pub norms: [BatchNormParams; 3],
    pub lstm_fwd: LstmParams,
    pub lstm_bwd: LstmParams,
    pub head: LinearParams,
}

/// A named view of one tensor.
pub struct NamedTensor<'a> {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: &'a [f64],
}

impl ModelParams {
    /// Every tensor zero; batch-norm scales one and running variances one.
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let [c1, c2, c3] = config.conv_channels;
        let [k1, k2, k3] = config.kernels;
        Ok(Self {
            config,
            convs: [
                Conv1dParams::zeros(1, c1, k1),
                Conv1dParams::zeros(c1, c2, k2),
                Conv1dParams::zeros(c2, c3, k3),
            ],
            norms: [BatchNormParams::new(c1), BatchNormParams::new(c2), BatchNormParams::new(c3)],
            lstm_fwd: LstmParams::zeros(c3, config.hidden),
            lstm_bwd: LstmParams::zeros(c3, config.hidden),
            head: LinearParams::zeros(2 * config.hidden, config.classes),
        })
    }

    /// Seeded initialization: every weight matrix uniform in
    /// `±1/sqrt(fan_in)`, biases zero except the forget-gate bias (1).
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |w: &mut [f64], fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in w {
                *v = rng.gen_range(-bound..bound);
            }
        };
        for conv in &mut p.convs {
            let fan_in = conv.kernel * conv.in_channels;
            fill(&mut conv.weight, fan_in);
        }
        for lstm in [&mut p.lstm_fwd, &mut p.lstm_bwd] {
            let fan_in = lstm.hidden + lstm.input;
            fill(&mut lstm.weight, fan_in);
            let h = lstm.hidden;
            lstm.bias_ih[h..2 * h].fill(1.0);
        }
        let fan_in = p.head.in_features;
        fill(&mut p.head.weight, fan_in);
        Ok(p)
    }

    /// A same-shaped container of zeros, for gradients.
    pub fn zeros_like(&self) -> Self {
        let mut z = Self::zeros(self.config).expect("config already validated");
        for n in &mut z.norms {
            n.gamma.fill(0.0);
            n.running_var.fill(0.0);
        }
        z
    }

    /// `(layer name, learnable scalars)` in network order.
    pub fn layer_param_counts(&self) -> Vec<(&'static str, usize)> {
        vec![
            ("conv1", self.convs[0].param_count()),
            ("bn1", self.norms[0].param_count()),
            ("conv2", self.convs[1].param_count()),
            ("bn2", self.norms[1].param_count()),
            ("conv3", self.convs[2].param_count()),
            ("bn3", self.norms[2].param_count()),
            ("lstm", self.lstm_fwd.param_count() + self.lstm_bwd.param_count()),
            ("head", self.head.param_count()),
        ]
    }

    pub fn param_count(&self) -> usize {
        self.layer_param_counts().iter().map(|(_, n)| n).sum()
    }

    /// Learnable tensors in a fixed order.
    pub fn trainable(&self) -> Vec<NamedTensor<'_>> {
        let mut out = Vec::new();
        for (i, (conv, bn)) in self.convs.iter().zip(&self.norms).enumerate() {
            let n = i + 1;
            out.push(NamedTensor {
                name: format!("conv{n}.weight"),
                dims: vec![conv.out_channels, conv.kernel, conv.in_channels],
                data: &conv.weight,
            });
            out.push(NamedTensor { name: format!("conv{n}.bias"), dims: vec![conv.out_channels], data: &conv.bias });
            out.push(NamedTensor { name: format!("bn{n}.gamma"), dims: vec![bn.channels()], data: &bn.gamma });
            out.push(NamedTensor { name: format!("bn{n}.beta"), dims: vec![bn.channels()], data: &bn.beta });
        }
        for (dir, l) in [("fwd", &self.lstm_fwd), ("bwd", &self.lstm_bwd)] {
            out.push(NamedTensor {
                name: format!("lstm.{dir}.weight"),
                dims: vec![4 * l.hidden, l.hidden + l.input],
                data: &l.weight,
            });
            out.push(NamedTensor { name: format!("lstm.{dir}.bias_ih"), dims: vec![4 * l.hidden], data: &l.bias_ih });
            out.push(NamedTensor { name: format!("lstm.{dir}.bias_hh"), dims: vec![4 * l.hidden], data: &l.bias_hh });
        }
        out.push(NamedTensor {
            name: "head.weight".into(),
            dims: vec![self.head.out_features, self.head.in_features],
            data: &self.head.weight,
        });
        out.push(NamedTensor { name: "head.bias".into(), dims: vec![self.head.out_features], data: &self.head.bias });
        out
    }

    /// Non-learnable batch-norm statistics.
    pub fn buffers(&self) -> Vec<NamedTensor<'_>> {
        let mut out = Vec::new();
        for (i, bn) in self.norms.iter().enumerate() {
            let n = i + 1;
            out.push(NamedTensor { name: format!("bn{n}.running_mean"), dims: vec![bn.channels()], data: &bn.running_mean });
            out.push(NamedTensor { name: format!("bn{n}.running_var"), dims: vec![bn.channels()], data: &bn.running_var });
        }
        out
    }

    /// Mutable learnable tensors, same order as [`ModelParams::trainable`].
    pub fn trainable_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out: Vec<&mut Vec<f64>> = Vec::new();
        for (conv, bn) in self.convs.iter_mut().zip(self.norms.iter_mut()) {
            out.push(&mut conv.weight);
            out.push(&mut conv.bias);
            out.push(&mut bn.gamma);
            out.push(&mut bn.beta);
        }
        for l in [&mut self.lstm_fwd, &mut self.lstm_bwd] {
            out.push(&mut l.weight);
            out.push(&mut l.bias_ih);
            out.push(&mut l.bias_hh);
        }
        out.push(&mut self.head.weight);
        out.push(&mut self.head.bias);
        out
    }

    /// Mutable buffers, same order as [`ModelParams::buffers`].
    pub fn buffers_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out: Vec<&mut Vec<f64>> = Vec::new();
        for bn in &mut self.norms {
            out.push(&mut bn.running_mean);
            out.push(&mut bn.running_var);
        }
        out
    }

    /// Applies one batch's statistics to the running estimates.
    pub fn update_running_stats(&mut self, stats: &[BatchStats]) {
        for (bn, s) in self.norms.iter_mut().zip(stats) {
            bn.update_running(s);
        }
    }
}

/// Per-timestep class scores, `len x classes` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Logits {
    pub rows: usize,
    pub classes: usize,
    pub data: Vec<f64>,
}

impl Logits {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.classes..(i + 1) * self.classes]
    }

    /// Index of the largest score per row (first on ties).
    pub fn argmax(&self) -> Vec<u8> {
        self.data
            .chunks_exact(self.classes)
            .map(|row| {
                let mut best = 0;
                for (k, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = k;
                    }
                }
                best as u8
            })
            .collect()
    }
}

struct ConvBlockCache {
    col: Vec<f64>,
    bn: BnCache,
    /// Post-ReLU activation.
    out: Vec<f64>,
}

struct ForwardCache {
    batch: usize,
    len: usize,
    blocks: Vec<ConvBlockCache>,
    fwd: LstmCache,
    bwd: LstmCache,
    /// BiLSTM output, the head's input.
    features: Vec<f64>,
    stats: Vec<BatchStats>,
}

fn stack_batch(inputs: &[&[f64]]) -> Result<(Vec<f64>, usize, usize)> {
    let batch = inputs.len();
    if batch == 0 {
        return Err(Error::ShapeMismatch("empty batch".into()));
    }
    let len = inputs[0].len();
    if len == 0 || inputs.iter().any(|x| x.len() != len) {
        return Err(Error::ShapeMismatch("batch sequences must share a non-zero length".into()));
    }
    Ok((inputs.concat(), batch, len))
}

fn forward_impl(p: &ModelParams, inputs: &[&[f64]], mode: Mode) -> Result<(Logits, ForwardCache)> {
    let (mut x, batch, len) = stack_batch(inputs)?;
    let mut blocks = Vec::with_capacity(3);
    let mut stats = Vec::with_capacity(3);
    for (conv, bn) in p.convs.iter().zip(&p.norms) {
        let (y, col) = conv_forward(&x, batch, len, conv);
        let (mut z, s, bn_cache) = bn_forward(&y, bn, BN_EPS, mode)?;
        relu_in_place(&mut z);
        if let Some(s) = s {
            stats.push(s);
        }
        blocks.push(ConvBlockCache { col, bn: bn_cache, out: z.clone() });
        x = z;
    }
    let (hf, fwd) = lstm_forward(&x, batch, len, &p.lstm_fwd, false);
    let (hb, bwd) = lstm_forward(&x, batch, len, &p.lstm_bwd, true);
    let features = concat_directions(&hf, &hb, batch * len, p.config.hidden);
    let data = linear_forward(&features, batch * len, &p.head);
    let logits = Logits { rows: batch * len, classes: p.config.classes, data };
    Ok((logits, ForwardCache { batch, len, blocks, fwd, bwd, features, stats }))
}

/// Logits for a single sequence of any positive length.
pub fn model_forward(p: &ModelParams, input: &[f64], mode: Mode) -> Result<Logits> {
    forward_batch(p, &[input], mode)
}

/// Logits for equal-length sequences, rows ordered by sequence then time.
pub fn forward_batch(p: &ModelParams, inputs: &[&[f64]], mode: Mode) -> Result<Logits> {
    forward_impl(p, inputs, mode).map(|(l, _)| l)
}

/// Mean softmax cross-entropy, and its gradient with respect to the logits
/// when `want_grad` is set.
pub fn softmax_cross_entropy(logits: &Logits, targets: &[u8], want_grad: bool) -> Result<(f64, Vec<f64>)> {
    if targets.len() != logits.rows {
        return Err(Error::LengthMismatch(logits.rows, targets.len()));
    }
    let n = logits.rows as f64;
    let mut loss = 0.0;
    let mut grad = if want_grad { vec![0.0; logits.data.len()] } else { Vec::new() };
    for (i, &y) in targets.iter().enumerate() {
        let row = logits.row(i);
        let y = y as usize;
        if y >= logits.classes {
            return Err(Error::ShapeMismatch(format!("target {y} for {} classes", logits.classes)));
        }
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let log_z = max + sum.ln();
        loss += log_z - row[y];
        if want_grad {
            let g = &mut grad[i * logits.classes..(i + 1) * logits.classes];
            for (k, gk) in g.iter_mut().enumerate() {
                *gk = ((row[k] - log_z).exp() - f64::from(u8::from(k == y))) / n;
            }
        }
    }
    Ok((loss / n, grad))
}

/// A training batch: equal-length inputs with per-timestep 0/1 targets.
#[derive(Debug, Clone, Copy)]
pub struct BatchRef<'a> {
    pub inputs: &'a [&'a [f64]],
    pub targets: &'a [&'a [u8]],
}

/// Loss with batch statistics (train mode) or running statistics.
pub fn batch_loss(p: &ModelParams, batch: BatchRef<'_>, mode: Mode) -> Result<f64> {
    let logits = forward_batch(p, batch.inputs, mode)?;
    let targets = batch.targets.concat();
    softmax_cross_entropy(&logits, &targets, false).map(|(l, _)| l)
}

pub struct LossAndGrad {
    pub loss: f64,
    pub grads: ModelParams,
    /// Batch-norm statistics of this batch, one per block.
    pub stats: Vec<BatchStats>,
}

/// Train-mode loss and the gradient of every learnable tensor, by full
/// backpropagation through the network and through time.
pub fn loss_and_grad(p: &ModelParams, batch: BatchRef<'_>) -> Result<LossAndGrad> {
    if batch.inputs.len() != batch.targets.len() {
        return Err(Error::LengthMismatch(batch.inputs.len(), batch.targets.len()));
    }
    for (x, y) in batch.inputs.iter().zip(batch.targets) {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch(x.len(), y.len()));
        }
        if y.iter().any(|&v| v > 1) {
            return Err(Error::InvalidParameter("targets must be 0 or 1".into()));
        }
    }
    let (logits, cache) = forward_impl(p, batch.inputs, Mode::Train)?;
    let targets = batch.targets.concat();
    let (loss, dlogits) = softmax_cross_entropy(&logits, &targets, true)?;

    let mut grads = p.zeros_like();
    let (batch_n, len) = (cache.batch, cache.len);
    let rows = batch_n * len;
    let dfeat = linear_backward(&dlogits, &cache.features, rows, &p.head, &mut grads.head);
    let (dhf, dhb) = split_directions(&dfeat, rows, p.config.hidden);
    let lstm_in = &cache.blocks[2].out;
    let mut dx = lstm_backward(&dhf, lstm_in, batch_n, len, &p.lstm_fwd, &cache.fwd, &mut grads.lstm_fwd, false);
    let dxb = lstm_backward(&dhb, lstm_in, batch_n, len, &p.lstm_bwd, &cache.bwd, &mut grads.lstm_bwd, true);
    for (a, b) in dx.iter_mut().zip(&dxb) {
        *a += b;
    }
    for layer in (0..3).rev() {
        let block = &cache.blocks[layer];
        relu_backward(&mut dx, &block.out);
        let dy = bn_backward(&dx, &block.bn, &p.norms[layer], &mut grads.norms[layer]);
        let need_input = layer > 0;
        match conv_backward(&dy, &block.col, batch_n, len, &p.convs[layer], &mut grads.convs[layer], need_input) {
            Some(d) => dx = d,
            None => break,
        }
    }
    Ok(LossAndGrad { loss, grads, stats: cache.stats })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_counts() {
        let p = ModelParams::zeros(ModelConfig::full()).unwrap();
        let counts: Vec<usize> = p.layer_param_counts().iter().map(|(_, n)| *n).collect();
        assert_eq!(counts, vec![384, 128, 24_704, 256, 98_560, 512, 395_264, 514]);
        assert_eq!(p.param_count(), FULL_PARAM_COUNT);
        let from_tensors: usize = p.trainable().iter().map(|t| t.data.len()).sum();
        assert_eq!(from_tensors, FULL_PARAM_COUNT);
    }

    #[test]
    fn uniform_logits_give_ln2() {
        let logits = Logits { rows: 3, classes: 2, data: vec![0.3; 6] };
        let (l, _) = softmax_cross_entropy(&logits, &[0, 1, 1], false).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn confident_logits_have_tiny_loss() {
        let logits = Logits { rows: 2, classes: 2, data: vec![50.0, 0.0, 0.0, 50.0] };
        let (l, _) = softmax_cross_entropy(&logits, &[0, 1], false).unwrap();
        assert!(l < 1e-6);
    }

    #[test]
    fn zero_model_is_translation_invariant() {
        let p = ModelParams::zeros(ModelConfig::tiny()).unwrap();
        let x: Vec<f64> = (0..40).map(|i| (i as f64 * 0.3).sin()).collect();
        let l = model_forward(&p, &x, Mode::Eval).unwrap();
        for i in 1..l.rows {
            assert_eq!(l.row(i), l.row(0));
        }
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = ModelParams::init(ModelConfig::tiny(), 3).unwrap();
        let b = ModelParams::init(ModelConfig::tiny(), 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, ModelParams::init(ModelConfig::tiny(), 4).unwrap());
        let bound = 1.0 / 5f64.sqrt();
        assert!(a.convs[0].weight.iter().all(|w| w.abs() < bound));
        let h = a.config.hidden;
        assert!(a.lstm_fwd.bias_ih[h..2 * h].iter().all(|&b| b == 1.0));
        assert!(a.lstm_fwd.bias_hh.iter().all(|&b| b == 0.0));
        assert!(a.head.bias.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn batch_shape_errors() {
        let p = ModelParams::zeros(ModelConfig::tiny()).unwrap();
        let a = [1.0; 5];
        let b = [1.0; 6];
        assert!(forward_batch(&p, &[&a, &b], Mode::Eval).is_err());
        assert!(forward_batch(&p, &[], Mode::Eval).is_err());
    }
}
