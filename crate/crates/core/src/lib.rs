//! Synthetic ECG generation, physics-based preprocessing and a from-scratch
//! ConvBiLSTM for per-timestep P/QRS/T segmentation.
//!
//! The crate is organised as a pipeline:
//!
//! - [`signal`]: sampled signals, label masks and the conditioning chain
//! - [`synth`]: Gaussian-sum beats with exact masks and spectral validation
//! - [`spectral`]: magnitude spectra and per-wave dominant frequencies
//! - [`transforms`]: Hilbert envelope, Euler derivative, Gauss–Legendre smoothing
//! - [`neural`]: the segmentation network, its gradients and training loop
//! - [`evaluate`]: cross-correlation classification, metrics and the method comparison
//! - [`ingest`]: annotation, mask and record file formats

pub mod error;
pub mod evaluate;
mod fft;
pub mod ingest;
pub mod neural;
pub mod signal;
pub mod spectral;
pub mod synth;
pub mod transforms;

pub use error::{Error, Result};
pub use signal::{LabelMask, SampledSignal, WaveClass};
pub use spectral::Spectrum;
pub use synth::{GaussianBeatConfig, GaussianComponent, Record};
pub use transforms::{Method, Preprocessing};
