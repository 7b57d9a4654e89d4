//! From-scratch ConvBiLSTM segmenter.

mod checkpoint;
mod layers;
mod linalg;
mod lstm;
mod model;
mod train;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, MAGIC, VERSION};
pub use layers::{
    batchnorm1d_forward, conv1d_forward, relu, BatchNormParams, BatchStats, Conv1dParams, LinearParams, Mode,
    BN_EPS, BN_MOMENTUM,
};
pub use lstm::{bilstm_forward, lstm_cell, CellGates, LstmParams};
pub use model::{
    batch_loss, forward_batch, loss_and_grad, model_forward, softmax_cross_entropy, BatchRef, Logits,
    LossAndGrad, ModelConfig, ModelParams, NamedTensor, FULL_PARAM_COUNT, WINDOW_LEN,
};
pub use train::{train, train_from, Adam, Sample, TrainConfig, TrainOutcome};

/// Splits a sequence into consecutive windows of at most `window` samples.
pub fn chunk(len: usize, window: usize) -> Vec<(usize, usize)> {
    (0..len).step_by(window.max(1)).map(|s| (s, (s + window).min(len))).collect()
}
