use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::FrequencyGrid;
use crate::units::pm_to_angular;
use crate::{Error, Result};

/// Complex filter (or pump-envelope) amplitude sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralAmplitude {
    grid: FrequencyGrid,
    amp: Vec<Complex64>,
}

impl SpectralAmplitude {
    /// Wraps raw samples. A passive filter never exceeds unit modulus.
    pub fn new(grid: FrequencyGrid, amp: Vec<Complex64>) -> Result<Self> {
        if amp.len() != grid.n_points() {
            return Err(Error::invalid(format!("{} amplitudes for a {}-point grid", amp.len(), grid.n_points())));
        }
        if amp.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::NonFinite("spectral amplitude"));
        }
        if let Some(a) = amp.iter().find(|a| a.norm() > 1.0 + 1e-9) {
            return Err(Error::invalid(format!("amplitude modulus {} exceeds 1", a.norm())));
        }
        Ok(SpectralAmplitude { grid, amp })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.amp
    }

    /// |F|^2 per node.
    pub fn power(&self) -> Vec<f64> {
        self.amp.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Multiplies every node by `factor` (must keep |amp| <= 1).
    pub fn scaled(&self, factor: Complex64) -> Result<Self> {
        Self::new(self.grid, self.amp.iter().map(|a| a * factor).collect())
    }
}

/// One row of a tabulated filter: angular-frequency offset, |F|^2, phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub omega: f64,
    pub power: f64,
    pub phase: f64,
}

/// Tabulated filter, sorted by ascending `omega`.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterTable {
    rows: Vec<TableRow>,
}

impl FilterTable {
    /// Rows must have strictly monotone abscissae (either direction).
    pub fn new(mut rows: Vec<TableRow>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::invalid("filter table needs at least two rows"));
        }
        for r in &rows {
            if !(r.omega.is_finite() && r.power.is_finite() && r.phase.is_finite()) {
                return Err(Error::NonFinite("filter table"));
            }
            if !(0.0..=1.0).contains(&r.power) {
                return Err(Error::invalid(format!("table power {} outside [0, 1]", r.power)));
            }
        }
        if rows.windows(2).all(|w| w[1].omega < w[0].omega) {
            rows.reverse();
        }
        if let Some(i) = rows.windows(2).position(|w| w[1].omega <= w[0].omega) {
            return Err(Error::invalid(format!("filter table abscissae not strictly monotone at row {}", i + 1)));
        }
        Ok(FilterTable { rows })
    }

    pub fn rows(&self) -> &[TableRow] {
        &self.rows
    }

    /// Linear interpolation of power and phase; zero outside the table.
    pub fn sample(&self, omega: f64) -> Complex64 {
        let rows = &self.rows;
        if omega < rows[0].omega || omega > rows[rows.len() - 1].omega {
            return Complex64::new(0.0, 0.0);
        }
        let k = rows.partition_point(|r| r.omega <= omega).clamp(1, rows.len() - 1);
        let (a, b) = (rows[k - 1], rows[k]);
        let f = (omega - a.omega) / (b.omega - a.omega);
        let power = a.power + f * (b.power - a.power);
        let phase = a.phase + f * (b.phase - a.phase);
        Complex64::from_polar(power.max(0.0).sqrt(), phase)
    }
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    wavelength_pm: f64,
    reflectance: f64,
    #[serde(default)]
    phase_rad: Option<f64>,
}

/// Reads `wavelength_pm,reflectance[,phase_rad]`, wavelengths as offsets from
/// line center. Longer wavelength maps to negative angular-frequency offset.
pub fn read_filter_table(path: impl AsRef<Path>) -> Result<FilterTable> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut rows = Vec::new();
    for rec in reader.deserialize() {
        let r: CsvRow = rec?;
        rows.push(TableRow {
            omega: -pm_to_angular(r.wavelength_pm),
            power: r.reflectance,
            phase: r.phase_rad.unwrap_or(0.0),
        });
    }
    FilterTable::new(rows)
}

/// Filter shapes; `fwhm` is the full width at half maximum of |F|^2 [rad/s].
#[derive(Clone, Debug, PartialEq)]
pub enum FilterShape {
    Rect { fwhm: f64 },
    Gaussian { fwhm: f64 },
    Lorentzian { fwhm: f64 },
    Tabulated(FilterTable),
}

/// Samples a zero-phase analytic filter (or a table) on `grid`.
///
/// The rectangle is cell-averaged: edge nodes carry the fraction of their
/// cell inside the passband, so the integrated width is exactly `fwhm`.
pub fn make_filter(shape: &FilterShape, grid: &FrequencyGrid) -> Result<SpectralAmplitude> {
    if let Some(w) = shape.fwhm() {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::invalid(format!("filter fwhm must be positive, got {w}")));
        }
        if w > grid.span() {
            return Err(Error::invalid(format!(
                "filter fwhm {w:.4e} rad/s exceeds grid span {:.4e} rad/s",
                grid.span()
            )));
        }
    }
    let h = grid.spacing();
    let amp = grid
        .values()
        .into_iter()
        .map(|om| match shape {
            FilterShape::Rect { fwhm } => {
                let half = fwhm / 2.0;
                let lo = (om - h / 2.0).max(-half);
                let hi = (om + h / 2.0).min(half);
                Complex64::new(((hi - lo) / h).clamp(0.0, 1.0), 0.0)
            }
            FilterShape::Gaussian { fwhm } => {
                Complex64::new((-2.0 * std::f64::consts::LN_2 * (om / fwhm).powi(2)).exp(), 0.0)
            }
            FilterShape::Lorentzian { fwhm } => Complex64::new(1.0 / (1.0 + (2.0 * om / fwhm).powi(2)).sqrt(), 0.0),
            FilterShape::Tabulated(t) => t.sample(om),
        })
        .collect();
    SpectralAmplitude::new(*grid, amp)
}

impl FilterShape {
    pub fn fwhm(&self) -> Option<f64> {
        match self {
            FilterShape::Rect { fwhm } | FilterShape::Gaussian { fwhm } | FilterShape::Lorentzian { fwhm } => {
                Some(*fwhm)
            }
            FilterShape::Tabulated(_) => None,
        }
    }
}
