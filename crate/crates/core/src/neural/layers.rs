//! Convolution, batch normalization, ReLU and the linear head.
//!
//! Activations are stored time-major: a batch of `B` sequences of length `L`
//! with `C` channels is a `(B * L) x C` row-major matrix, rows ordered by
//! sequence then time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::linalg::{gemm, Mat, MatMut};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Layer execution mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Batch statistics.
    Train,
    /// Running statistics.
    Eval,
}

/// Same-padded 1-D convolution. Weights are laid out `[out][kernel][in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1dParams {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv1dParams {
    pub fn zeros(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel,
            weight: vec![0.0; out_channels * kernel * in_channels],
            bias: vec![0.0; out_channels],
        }
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    fn cols(&self) -> usize {
        self.kernel * self.in_channels
    }
}

/// Unfolds `x` (`batch * len` rows, `in_channels` columns) into the
/// `batch * len` x `kernel * in_channels` patch matrix.
fn im2col(x: &[f64], batch: usize, len: usize, p: &Conv1dParams) -> Vec<f64> {
    let (k, c) = (p.kernel, p.in_channels);
    let pad = k / 2;
    let mut col = vec![0.0; batch * len * k * c];
    for b in 0..batch {
        for t in 0..len {
            let row = &mut col[(b * len + t) * k * c..(b * len + t + 1) * k * c];
            for j in 0..k {
                let src = t as isize + j as isize - pad as isize;
                if src < 0 || src >= len as isize {
                    continue;
                }
                let src = (b * len + src as usize) * c;
                row[j * c..(j + 1) * c].copy_from_slice(&x[src..src + c]);
            }
        }
    }
    col
}

fn col2im(dcol: &[f64], batch: usize, len: usize, p: &Conv1dParams) -> Vec<f64> {
    let (k, c) = (p.kernel, p.in_channels);
    let pad = k / 2;
    let mut dx = vec![0.0; batch * len * c];
    for b in 0..batch {
        for t in 0..len {
            let row = &dcol[(b * len + t) * k * c..(b * len + t + 1) * k * c];
            for j in 0..k {
                let dst = t as isize + j as isize - pad as isize;
                if dst < 0 || dst >= len as isize {
                    continue;
                }
                let dst = (b * len + dst as usize) * c;
                for (d, g) in dx[dst..dst + c].iter_mut().zip(&row[j * c..(j + 1) * c]) {
                    *d += g;
                }
            }
        }
    }
    dx
}

/// Forward pass; returns the output and the patch matrix needed for backward.
pub(crate) fn conv_forward(
    x: &[f64],
    batch: usize,
    len: usize,
    p: &Conv1dParams,
) -> (Vec<f64>, Vec<f64>) {
    let rows = batch * len;
    let col = im2col(x, batch, len, p);
    let mut y = Vec::with_capacity(rows * p.out_channels);
    for _ in 0..rows {
        y.extend_from_slice(&p.bias);
    }
    gemm(
        Mat::new(&col, rows, p.cols()),
        Mat::new(&p.weight, p.out_channels, p.cols()).t(),
        1.0,
        MatMut::new(&mut y, rows, p.out_channels),
    );
    (y, col)
}

/// Accumulates parameter gradients into `grad`; returns the input gradient
/// when `need_input_grad` is set.
pub(crate) fn conv_backward(
    dy: &[f64],
    col: &[f64],
    batch: usize,
    len: usize,
    p: &Conv1dParams,
    grad: &mut Conv1dParams,
    need_input_grad: bool,
) -> Option<Vec<f64>> {
    let rows = batch * len;
    gemm(
        Mat::new(dy, rows, p.out_channels).t(),
        Mat::new(col, rows, p.cols()),
        1.0,
        MatMut::new(&mut grad.weight, p.out_channels, p.cols()),
    );
    for row in dy.chunks_exact(p.out_channels) {
        for (g, d) in grad.bias.iter_mut().zip(row) {
            *g += d;
        }
    }
    if !need_input_grad {
        return None;
    }
    let mut dcol = vec![0.0; rows * p.cols()];
    gemm(
        Mat::new(dy, rows, p.out_channels),
        Mat::new(&p.weight, p.out_channels, p.cols()),
        0.0,
        MatMut::new(&mut dcol, rows, p.cols()),
    );
    Some(col2im(&dcol, batch, len, p))
}

/// Cross-correlation with zero same-padding on a single `channels x length`
/// input (channel-major), returning `out_channels x length`:
/// `y[o][t] = b[o] + sum_{i, c} w[o][i][c] * x[c][t + i - k/2]`.
pub fn conv1d_forward(x: &[f64], channels: usize, p: &Conv1dParams) -> Result<Vec<f64>> {
    if p.kernel % 2 == 0 {
        return Err(Error::ShapeMismatch(format!("kernel length {} must be odd", p.kernel)));
    }
    if channels != p.in_channels || channels == 0 || x.len() % channels != 0 || x.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "input of {} values with {channels} channels for a {}-channel convolution",
            x.len(),
            p.in_channels
        )));
    }
    if p.weight.len() != p.out_channels * p.cols() || p.bias.len() != p.out_channels {
        return Err(Error::ShapeMismatch("convolution parameter sizes".into()));
    }
    let len = x.len() / channels;
    let time_major = transpose(x, channels, len);
    let (y, _) = conv_forward(&time_major, 1, len, p);
    Ok(transpose(&y, len, p.out_channels))
}

/// Row-major `rows x cols` -> `cols x rows`.
pub(crate) fn transpose(x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = x[r * cols + c];
        }
    }
    out
}

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

pub(crate) fn relu_in_place(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Zeroes gradient entries where the ReLU output was not positive.
pub(crate) fn relu_backward(dy: &mut [f64], y: &[f64]) {
    for (d, &v) in dy.iter_mut().zip(y) {
        if v <= 0.0 {
            *d = 0.0;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormParams {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

impl BatchNormParams {
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    /// Learnable scalars (running statistics excluded).
    pub fn param_count(&self) -> usize {
        self.gamma.len() + self.beta.len()
    }

    /// Folds batch statistics into the running estimates.
    pub fn update_running(&mut self, stats: &BatchStats) {
        let n = stats.count as f64;
        let unbias = if stats.count > 1 { n / (n - 1.0) } else { 1.0 };
        for c in 0..self.channels() {
            self.running_mean[c] =
                (1.0 - BN_MOMENTUM) * self.running_mean[c] + BN_MOMENTUM * stats.mean[c];
            self.running_var[c] =
                (1.0 - BN_MOMENTUM) * self.running_var[c] + BN_MOMENTUM * stats.var[c] * unbias;
        }
    }
}

/// Per-channel mean and (biased) variance of one training batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub count: usize,
}

/// What backward needs from a batch-norm forward.
pub(crate) struct BnCache {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
}

/// Normalizes each column of a `rows x channels` matrix.
///
/// Train mode uses the batch statistics (returned so the caller can update
/// the running estimates); eval mode uses the running statistics.
pub fn batchnorm1d_forward(
    x: &[f64],
    p: &BatchNormParams,
    eps: f64,
    mode: Mode,
) -> Result<(Vec<f64>, Option<BatchStats>)> {
    let (y, stats, _) = bn_forward(x, p, eps, mode)?;
    Ok((y, stats))
}

pub(crate) fn bn_forward(
    x: &[f64],
    p: &BatchNormParams,
    eps: f64,
    mode: Mode,
) -> Result<(Vec<f64>, Option<BatchStats>, BnCache)> {
    let c = p.channels();
    if c == 0 || x.len() % c != 0 || x.is_empty() {
        return Err(Error::ShapeMismatch(format!("{} values for {c} channels", x.len())));
    }
    let rows = x.len() / c;
    let (mean, var, stats) = match mode {
        Mode::Train => {
            let mut mean = vec![0.0; c];
            for row in x.chunks_exact(c) {
                for (m, v) in mean.iter_mut().zip(row) {
                    *m += v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= rows as f64);
            let mut var = vec![0.0; c];
            for row in x.chunks_exact(c) {
                for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                    *s += (v - m) * (v - m);
                }
            }
            var.iter_mut().for_each(|s| *s /= rows as f64);
            let stats = BatchStats { mean: mean.clone(), var: var.clone(), count: rows };
            (mean, var, Some(stats))
        }
        Mode::Eval => (p.running_mean.clone(), p.running_var.clone(), None),
    };
    let mut inv_std = Vec::with_capacity(c);
    for (ch, v) in var.iter().enumerate() {
        let denom = (v + eps).sqrt();
        if !(denom > 0.0 && denom.is_finite()) {
            return Err(Error::ZeroVariance(ch));
        }
        inv_std.push(1.0 / denom);
    }
    let mut xhat = vec![0.0; x.len()];
    let mut y = vec![0.0; x.len()];
    for ((row, hrow), yrow) in x.chunks_exact(c).zip(xhat.chunks_exact_mut(c)).zip(y.chunks_exact_mut(c)) {
        for ch in 0..c {
            let h = (row[ch] - mean[ch]) * inv_std[ch];
            hrow[ch] = h;
            yrow[ch] = p.gamma[ch] * h + p.beta[ch];
        }
    }
    Ok((y, stats, BnCache { xhat, inv_std }))
}

/// Backward through a train-mode batch norm.
pub(crate) fn bn_backward(
    dy: &[f64],
    cache: &BnCache,
    p: &BatchNormParams,
    grad: &mut BatchNormParams,
) -> Vec<f64> {
    let c = p.channels();
    let rows = dy.len() / c;
    let mut sum_dxhat = vec![0.0; c];
    let mut sum_dxhat_xhat = vec![0.0; c];
    for (drow, hrow) in dy.chunks_exact(c).zip(cache.xhat.chunks_exact(c)) {
        for ch in 0..c {
            grad.gamma[ch] += drow[ch] * hrow[ch];
            grad.beta[ch] += drow[ch];
            let dxhat = drow[ch] * p.gamma[ch];
            sum_dxhat[ch] += dxhat;
            sum_dxhat_xhat[ch] += dxhat * hrow[ch];
        }
    }
    let n = rows as f64;
    let mut dx = vec![0.0; dy.len()];
    for ((xrow, drow), hrow) in dx.chunks_exact_mut(c).zip(dy.chunks_exact(c)).zip(cache.xhat.chunks_exact(c)) {
        for ch in 0..c {
            let dxhat = drow[ch] * p.gamma[ch];
            xrow[ch] = cache.inv_std[ch] / n
                * (n * dxhat - sum_dxhat[ch] - hrow[ch] * sum_dxhat_xhat[ch]);
        }
    }
    dx
}

/// Fully connected layer, weight `[out][in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    pub in_features: usize,
    pub out_features: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearParams {
    pub fn zeros(in_features: usize, out_features: usize) -> Self {
        Self {
            in_features,
            out_features,
            weight: vec![0.0; in_features * out_features],
            bias: vec![0.0; out_features],
        }
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }
}

pub(crate) fn linear_forward(x: &[f64], rows: usize, p: &LinearParams) -> Vec<f64> {
    let mut y = Vec::with_capacity(rows * p.out_features);
    for _ in 0..rows {
        y.extend_from_slice(&p.bias);
    }
    gemm(
        Mat::new(x, rows, p.in_features),
        Mat::new(&p.weight, p.out_features, p.in_features).t(),
        1.0,
        MatMut::new(&mut y, rows, p.out_features),
    );
    y
}

pub(crate) fn linear_backward(
    dy: &[f64],
    x: &[f64],
    rows: usize,
    p: &LinearParams,
    grad: &mut LinearParams,
) -> Vec<f64> {
    gemm(
        Mat::new(dy, rows, p.out_features).t(),
        Mat::new(x, rows, p.in_features),
        1.0,
        MatMut::new(&mut grad.weight, p.out_features, p.in_features),
    );
    for row in dy.chunks_exact(p.out_features) {
        for (g, d) in grad.bias.iter_mut().zip(row) {
            *g += d;
        }
    }
    let mut dx = vec![0.0; rows * p.in_features];
    gemm(
        Mat::new(dy, rows, p.out_features),
        Mat::new(&p.weight, p.out_features, p.in_features),
        0.0,
        MatMut::new(&mut dx, rows, p.in_features),
    );
    dx
}
