//! Segment classification, metrics, timing and the preprocessing comparison.

mod classify;
mod compare;
mod metrics;
mod stats;
mod timing;
mod xcorr;

pub use classify::{classify_segment, Classification, Templates, LAG_FRACTION};
pub use compare::{
    compare_preprocessing, compare_preprocessing_with, evaluate_samples, prepare_record, split_records, windowed_samples, Aggregate, CompareConfig,
    EvalReport, MeanStd, RunResult, WaveSpectrum, REPORT_COLUMNS,
};
pub use metrics::{segmentation_metrics, SegmentationMetrics};
pub use stats::paired_t_test;
pub use timing::{host_descriptor, time_inference, time_median, time_preprocessing, Timing};
pub use xcorr::{cross_correlation, CrossCorrelation};
