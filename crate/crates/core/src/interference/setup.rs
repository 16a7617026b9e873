use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::coherence_time;
use crate::detection::DetectorModel;
use crate::spectral::{FrequencyGrid, JointSpectralAmplitude};
use crate::{Error, Result};

/// Coincidence windows [s]; channel 1 is always the trigger.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoincidenceConfig {
    pub tau_14: f64,
    pub tau_23: f64,
}

impl CoincidenceConfig {
    pub fn new(tau_14: f64, tau_23: f64) -> Result<Self> {
        let c = CoincidenceConfig { tau_14, tau_23 };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_14.is_finite() && self.tau_14 > 0.0 && self.tau_23.is_finite() && self.tau_23 > 0.0) {
            return Err(Error::invalid("coincidence windows must be positive"));
        }
        Ok(())
    }
}

/// Largest grid spacing that resolves every kernel up to time scale `t_max`.
pub fn max_grid_spacing(t_max: f64) -> f64 {
    2.0 * PI / (8.0 * t_max)
}

/// Two sources on one grid, detectors and windows.
#[derive(Clone, Debug)]
pub struct InterferenceSetup {
    pub jsa_a: JointSpectralAmplitude,
    pub jsa_b: JointSpectralAmplitude,
    pub detectors: DetectorModel,
    pub windows: CoincidenceConfig,
    tc_a: f64,
    tc_b: f64,
}

impl InterferenceSetup {
    pub fn new(
        jsa_a: JointSpectralAmplitude,
        jsa_b: JointSpectralAmplitude,
        detectors: DetectorModel,
        windows: CoincidenceConfig,
    ) -> Result<Self> {
        if !jsa_a.grid().same_as(jsa_b.grid()) {
            return Err(Error::GridMismatch("source A vs source B".into()));
        }
        windows.validate()?;
        DetectorModel::new(detectors.jitter_fwhm)?;
        let tc_a = coherence_time(&jsa_a, 0.0, 0.0)?;
        let tc_b = if jsa_a == jsa_b { tc_a } else { coherence_time(&jsa_b, 0.0, 0.0)? };
        Ok(InterferenceSetup { jsa_a, jsa_b, detectors, windows, tc_a, tc_b })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        self.jsa_a.grid()
    }

    /// Jitter-free coherence times of sources A and B [s].
    pub fn coherence_times(&self) -> (f64, f64) {
        (self.tc_a, self.tc_b)
    }

    pub fn max_coherence_time(&self) -> f64 {
        self.tc_a.max(self.tc_b)
    }

    /// Same sources and detectors with other windows.
    pub fn with_windows(&self, windows: CoincidenceConfig) -> Result<Self> {
        windows.validate()?;
        Ok(InterferenceSetup { windows, ..self.clone() })
    }

    pub fn with_detectors(&self, detectors: DetectorModel) -> Result<Self> {
        DetectorModel::new(detectors.jitter_fwhm)?;
        Ok(InterferenceSetup { detectors, ..self.clone() })
    }

    /// Sources A and B exchanged.
    pub fn swapped(&self) -> Self {
        InterferenceSetup {
            jsa_a: self.jsa_b.clone(),
            jsa_b: self.jsa_a.clone(),
            tc_a: self.tc_b,
            tc_b: self.tc_a,
            ..self.clone()
        }
    }

    /// Refuses grids too coarse for delays up to `max_abs_tau`.
    pub fn check_resolution(&self, max_abs_tau: f64) -> Result<()> {
        let t_max = self.windows.tau_14.max(self.windows.tau_23).max(max_abs_tau.abs()).max(self.tc_a).max(self.tc_b);
        let max_spacing = max_grid_spacing(t_max);
        let grid = self.grid();
        if grid.spacing() > max_spacing * (1.0 + 1e-12) {
            return Err(Error::Resolution {
                spacing: grid.spacing(),
                max_spacing,
                required_points: crate::spectral::FrequencyGrid::resolving(grid.span(), max_spacing, 3)?.n_points(),
            });
        }
        Ok(())
    }
}
