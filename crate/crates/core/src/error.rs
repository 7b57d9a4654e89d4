use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// Variant names are stable: the CLI prints them verbatim so scripts can
/// match on them.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("InvalidSignal: {0}")]
    InvalidSignal(String),
    #[error("InvalidParameter: {0}")]
    InvalidParameter(String),
    #[error("ConstantSignal: standard deviation is zero")]
    ConstantSignal,
    #[error("BandOutOfRange: band [{lo}, {hi}] Hz is not inside (0, {nyquist}) Hz")]
    BandOutOfRange { lo: f64, hi: f64, nyquist: f64 },
    #[error("NonIntegerFactor: {fs} Hz / {target_fs} Hz is not an integer")]
    NonIntegerFactor { fs: f64, target_fs: f64 },
    #[error("ConfigInvalid: {0}")]
    ConfigInvalid(String),
    #[error("ResolutionMismatch: {0}")]
    ResolutionMismatch(String),
    #[error("NotConverged: best similarity {best_score:.6} after {iterations} iterations")]
    NotConverged { best_score: f64, iterations: usize },
    #[error("EmptySignal")]
    EmptySignal,
    #[error("EmptyBand: no spectral bins in [{lo}, {hi}] Hz")]
    EmptyBand { lo: f64, hi: f64 },
    #[error("ZeroSpectrum")]
    ZeroSpectrum,
    #[error("ClassAbsent: no {0} samples in mask")]
    ClassAbsent(String),
    #[error("StepTooLarge: step of {step} samples for a signal of {len} samples")]
    StepTooLarge { step: usize, len: usize },
    #[error("OrderOutOfRange: quadrature order {0} not in 1..=64")]
    OrderOutOfRange(usize),
    #[error("WindowTooSmall: window {window} s is shorter than two samples at {fs} Hz")]
    WindowTooSmall { window: f64, fs: f64 },
    #[error("ShapeMismatch: {0}")]
    ShapeMismatch(String),
    #[error("ZeroVariance: channel {0}")]
    ZeroVariance(usize),
    #[error("EmptyDataset")]
    EmptyDataset,
    #[error("EmptyInput")]
    EmptyInput,
    #[error("SegmentTooShort: {0} samples (need at least 3)")]
    SegmentTooShort(usize),
    #[error("LengthMismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("InsufficientSeeds: {0} seeds given, need at least 3")]
    InsufficientSeeds(usize),
    #[error("ParseError at {location}: {message}")]
    ParseError { location: String, message: String },
    #[error("SpanOutOfRange: span {index} ends at {end} s past signal duration {duration} s")]
    SpanOutOfRange { index: usize, end: f64, duration: f64 },
    #[error("IoFailure: {0}")]
    IoFailure(String),
}

impl Error {
    /// The variant name, as printed at the start of the message.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidSignal(_) => "InvalidSignal",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::ConstantSignal => "ConstantSignal",
            Error::BandOutOfRange { .. } => "BandOutOfRange",
            Error::NonIntegerFactor { .. } => "NonIntegerFactor",
            Error::ConfigInvalid(_) => "ConfigInvalid",
            Error::ResolutionMismatch(_) => "ResolutionMismatch",
            Error::NotConverged { .. } => "NotConverged",
            Error::EmptySignal => "EmptySignal",
            Error::EmptyBand { .. } => "EmptyBand",
            Error::ZeroSpectrum => "ZeroSpectrum",
            Error::ClassAbsent(_) => "ClassAbsent",
            Error::StepTooLarge { .. } => "StepTooLarge",
            Error::OrderOutOfRange(_) => "OrderOutOfRange",
            Error::WindowTooSmall { .. } => "WindowTooSmall",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::ZeroVariance(_) => "ZeroVariance",
            Error::EmptyDataset => "EmptyDataset",
            Error::EmptyInput => "EmptyInput",
            Error::SegmentTooShort(_) => "SegmentTooShort",
            Error::LengthMismatch(..) => "LengthMismatch",
            Error::InsufficientSeeds(_) => "InsufficientSeeds",
            Error::ParseError { .. } => "ParseError",
            Error::SpanOutOfRange { .. } => "SpanOutOfRange",
            Error::IoFailure(_) => "IoFailure",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::IoFailure(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
