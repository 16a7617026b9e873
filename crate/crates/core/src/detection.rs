//! Gaussian timing-jitter model of detector plus time tagger.

use serde::{Deserialize, Serialize};

use crate::units::{fwhm_per_sigma, ps};
use crate::{Error, Result};

/// Per-channel Gaussian jitter FWHM [s] for channels (1, 2', 3', 4).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorModel {
    pub jitter_fwhm: [f64; 4],
}

impl Default for DetectorModel {
    fn default() -> Self {
        DetectorModel { jitter_fwhm: [ps(17.0), ps(13.0), ps(11.0), ps(16.0)] }
    }
}

impl DetectorModel {
    pub fn new(jitter_fwhm: [f64; 4]) -> Result<Self> {
        if jitter_fwhm.iter().any(|j| !(j.is_finite() && *j >= 0.0)) {
            return Err(Error::invalid("jitter FWHM must be finite and >= 0"));
        }
        Ok(DetectorModel { jitter_fwhm })
    }

    pub fn ideal() -> Self {
        DetectorModel { jitter_fwhm: [0.0; 4] }
    }

    /// Same jitter on every channel.
    pub fn uniform(jitter_fwhm: f64) -> Result<Self> {
        Self::new([jitter_fwhm; 4])
    }

    /// Gaussian standard deviation of channel index `k` (0-based).
    pub fn sigma(&self, k: usize) -> f64 {
        self.jitter_fwhm[k] / fwhm_per_sigma()
    }

    pub fn max_jitter(&self) -> f64 {
        self.jitter_fwhm.iter().copied().fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.jitter_fwhm.map(|j| j * factor))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JitterKind {
    Fwhm,
    Rms,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JitterComponent {
    /// [s]
    pub value: f64,
    pub kind: JitterKind,
}

/// FWHM of the convolution of independent Gaussian jitter sources.
pub fn effective_jitter(components: &[JitterComponent]) -> Result<f64> {
    if components.is_empty() {
        return Err(Error::invalid("no jitter components"));
    }
    let mut sum_sq = 0.0;
    for c in components {
        if !(c.value.is_finite() && c.value >= 0.0) {
            return Err(Error::invalid(format!("jitter component {} must be >= 0", c.value)));
        }
        let fwhm = match c.kind {
            JitterKind::Fwhm => c.value,
            JitterKind::Rms => c.value * fwhm_per_sigma(),
        };
        sum_sq += fwhm * fwhm;
    }
    Ok(sum_sq.sqrt())
}

/// Frequency kernel `exp(-sigma^2 dOmega^2 / 2)` of a Gaussian response of
/// FWHM `jitter_fwhm`, normalized to 1 at `dOmega = 0`.
pub fn jitter_kernel(jitter_fwhm: f64, delta_omega: f64) -> f64 {
    let sigma = jitter_fwhm / fwhm_per_sigma();
    (-0.5 * sigma * sigma * delta_omega * delta_omega).exp()
}
