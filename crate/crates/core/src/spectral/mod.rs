//! Spectral filter responses and joint spectral amplitudes.
//!
//! Everything lives on a [`FrequencyGrid`]: an odd number of uniformly spaced
//! angular-frequency deviations symmetric about zero, so that the idler filter
//! can be evaluated at `-Omega` by index reflection.

mod fbg;
mod filter;
mod grid;
mod jsa;

pub use fbg::{fbg_response, fit_fbg, FbgFit, FbgModel, ReflectanceSample, DESIGN_KAPPA_LENGTH};
pub use filter::{make_filter, read_filter_table, FilterShape, FilterTable, SpectralAmplitude, TableRow};
pub use grid::FrequencyGrid;
pub use jsa::{
    joint_spectral_amplitude, joint_spectral_amplitude_unnormalized, rect_width_for_coherence_time,
    JointSpectralAmplitude, SINC_SQ_FWHM_PRODUCT,
};
