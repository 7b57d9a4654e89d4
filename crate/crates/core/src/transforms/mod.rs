//! The three preprocessing operators fed to the segmenter: analytic-signal
//! envelope, forward-difference derivative and Gauss–Legendre smoothing.

mod euler;
mod hilbert;
mod quadrature;
mod smooth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::SampledSignal;

pub use euler::{euler_diff, euler_step, DEFAULT_DT};
pub use hilbert::{hilbert, AnalyticSignal};
pub use quadrature::{gauss_legendre_rule, QuadratureRule, MAX_ORDER};
pub use smooth::{gl_smooth, gl_smooth_with, DEFAULT_NODES, DEFAULT_WINDOW};

/// Which transform to apply, without its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Raw,
    Hilbert,
    Euler,
    GaussLegendre,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Raw, Method::Hilbert, Method::Euler, Method::GaussLegendre];

    pub fn name(self) -> &'static str {
        match self {
            Method::Raw => "raw",
            Method::Hilbert => "hilbert",
            Method::Euler => "euler",
            Method::GaussLegendre => "gauss-legendre",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method `{s}`")))
    }
}

/// Parameters of every transform; only the selected method's fields are used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub method: Method,
    /// Euler step, seconds.
    pub dt: f64,
    /// Gauss–Legendre window, seconds.
    pub window: f64,
    pub gl_nodes: usize,
}

impl Preprocessing {
    pub fn new(method: Method) -> Self {
        Self { method, dt: DEFAULT_DT, window: DEFAULT_WINDOW, gl_nodes: DEFAULT_NODES }
    }

    /// Applies the transform. Hilbert yields the envelope.
    pub fn apply(&self, signal: &SampledSignal) -> Result<SampledSignal> {
        match self.method {
            Method::Raw => Ok(signal.clone()),
            Method::Hilbert => hilbert(signal)?.envelope_signal(),
            Method::Euler => euler_diff(signal, self.dt),
            Method::GaussLegendre => gl_smooth(signal, self.window, self.gl_nodes),
        }
    }

    /// Human-readable parameters as realized at `fs` (the Euler step is
    /// rounded to whole samples).
    pub fn effective_params(&self, fs: f64) -> String {
        match self.method {
            Method::Raw => "none".into(),
            Method::Hilbert => "output=envelope".into(),
            Method::Euler => match euler_step(self.dt, fs) {
                Ok(step) => format!(
                    "dt_requested={}s;step={}samples;dt_effective={}s",
                    self.dt,
                    step,
                    step as f64 / fs
                ),
                Err(_) => format!("dt_requested={}s;invalid", self.dt),
            },
            Method::GaussLegendre => format!("nodes={};window={}s", self.gl_nodes, self.window),
        }
    }
}

impl Default for Preprocessing {
    fn default() -> Self {
        Self::new(Method::Raw)
    }
}
