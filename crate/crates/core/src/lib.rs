//! Newton time-extracting wavelet transform and a chirp filter built on it.
//!
//! The transform analyses a real signal with an analytic Morlet wavelet,
//! estimates for every time-scale point the time at which the local group
//! delay crosses the analysis time, and keeps only points that are close to
//! such a crossing. Synthesising the surviving coefficients gives a filtered
//! signal in which frequency-modulated pulses are retained and stationary
//! tones are suppressed.

pub mod bench;
pub mod cwt;
pub mod detect;
pub mod error;
pub mod filter;
pub mod io;
pub mod ntewt;
pub mod scenario;
pub mod signal;
pub mod spectral;

pub use cwt::{Analyzer, ScaleGrid, Tfr, TfrKind};
pub use detect::{detection_gain, matched_filter, DetectionReport};
pub use error::{Error, Result};
pub use filter::{ntewt_filter, FilterResult, NtewtFilter};
pub use ntewt::{analyze, MetricMode, NtewtAnalysis, NtewtConfig};
pub use scenario::{Preset, ScenarioConfig};
pub use signal::{ChirpSpec, HarmonicSpec, NoiseSpec, Signal};
pub use spectral::{DerivativeForm, WaveletParams};
