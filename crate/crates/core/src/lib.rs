//! Intensity-fluctuation (fading) statistics for underwater wireless optical
//! channels.
//!
//! The crate covers the full analysis chain for a received-power record:
//!
//! - [`trace`] and [`histogram`]: ingestion, unit-mean normalization and the
//!   density-normalized histogram of the fading coefficient.
//! - [`distributions`]: log-normal, K, Gamma-Gamma and the two-lobe
//!   exponential + log-normal mixture (PDF, CDF, quantile, moments, sampling).
//! - [`estimation`]: scintillation index, temporal covariance coefficient and
//!   coherence time.
//! - [`fitting`]: least-squares histogram fits scored by RMSE and R².
//! - [`simulation`]: correlated fading time series and path loss.
//!
//! [`special`], [`quadrature`] and [`optimize`] hold the numerical kernels the
//! above are built on.

// `!(x > 0.0)`-style guards are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod error;
pub mod estimation;
pub mod fitting;
pub mod histogram;
pub mod io;
pub mod optimize;
pub mod quadrature;
pub mod simulation;
pub mod special;
pub mod trace;

pub use distributions::{FadingParams, Family};
pub use error::{Error, Result};
pub use estimation::{ChannelStats, CoherenceTime, CovarianceCurve};
pub use fitting::{BinWeighting, FitOptions, FitResult, FitRow};
pub use histogram::{BinSpec, EmpiricalPdf};
pub use simulation::{FadingProcessSpec, PathLossSpec};
pub use trace::{NormalizedTrace, SampleTrace};

/// Sampling rate assumed when a trace file carries no rate information (Sa/s).
pub const DEFAULT_SAMPLE_RATE: f64 = 25_000.0;
