//! Time-resolved four-photon Hong-Ou-Mandel interference for continuous-wave
//! pumped photon-pair sources.
//!
//! The crate is organised by physical stage:
//!
//! - [`spectral`]: filter responses (analytic and fiber Bragg gratings) and
//!   joint spectral amplitudes on a symmetric frequency grid.
//! - [`detection`]: Gaussian timing-jitter models and their frequency kernels.
//! - [`interference`]: coherence function, four-photon coincidence
//!   probability, its time-domain cross-check, HOM curves and visibility maps.
//! - [`timetags`]: Monte Carlo tag streams, fourfold counting and
//!   shifted-tag accidental estimation.
//! - [`rates`]: CW and pulsed fourfold rates, window optimization and
//!   per-pass swap budgets.
//!
//! All durations are SI seconds and all spectral coordinates are angular
//! frequency deviations in rad/s unless a name says otherwise (`_ps`, `_pm`).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detection;
pub mod error;
pub mod interference;
mod linalg;
pub mod rates;
pub mod simplex;
pub mod spectral;
pub mod timetags;
pub mod units;

pub use error::{Error, Result};
