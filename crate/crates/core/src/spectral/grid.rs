use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Number of points of the default grid.
pub const DEFAULT_POINTS: usize = 513;
/// Default half-width in units of the widest filter FWHM.
pub const DEFAULT_SPAN_FACTOR: f64 = 8.0;

/// Uniform angular-frequency grid `Omega_m in [-span, +span]` with an odd
/// number of nodes, so `Omega = 0` is a node and every node has its mirror.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyGrid {
    n_points: usize,
    span: f64,
}

impl FrequencyGrid {
    pub fn new(n_points: usize, span: f64) -> Result<Self> {
        if n_points < 3 || n_points.is_multiple_of(2) {
            return Err(Error::invalid(format!("grid needs an odd number of points >= 3, got {n_points}")));
        }
        if !(span.is_finite() && span > 0.0) {
            return Err(Error::invalid(format!("grid span must be positive, got {span}")));
        }
        Ok(FrequencyGrid { n_points, span })
    }

    /// Default grid for filters whose widest FWHM is `widest_fwhm` [rad/s].
    pub fn default_for(widest_fwhm: f64) -> Result<Self> {
        Self::new(DEFAULT_POINTS, DEFAULT_SPAN_FACTOR * widest_fwhm)
    }

    /// Smallest odd grid over `[-span, span]` whose spacing does not exceed
    /// `max_spacing`, never smaller than `min_points`.
    pub fn resolving(span: f64, max_spacing: f64, min_points: usize) -> Result<Self> {
        if !(max_spacing > 0.0) {
            return Err(Error::invalid("max_spacing must be positive"));
        }
        let n = required_points(span, max_spacing).max(min_points.max(3));
        Self::new(n | 1, span)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.span / (self.n_points - 1) as f64
    }

    /// Node `m` in rad/s.
    pub fn omega(&self, m: usize) -> f64 {
        let half = (self.n_points / 2) as f64;
        (m as f64 - half) * self.spacing()
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n_points).map(|m| self.omega(m)).collect()
    }

    /// Index of the node at `-Omega_m`.
    pub fn mirror(&self, m: usize) -> usize {
        self.n_points - 1 - m
    }

    pub(crate) fn same_as(&self, other: &FrequencyGrid) -> bool {
        self.n_points == other.n_points
            && (self.span - other.span).abs() <= 1e-12 * self.span.abs().max(other.span.abs())
    }
}

/// Odd node count needed for spacing <= `max_spacing` over `[-span, span]`.
pub(crate) fn required_points(span: f64, max_spacing: f64) -> usize {
    let intervals = (2.0 * span / max_spacing).ceil() as usize;
    let n = intervals + 1;
    if n.is_multiple_of(2) {
        n + 1
    } else {
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_even_and_tiny_grids() {
        assert!(FrequencyGrid::new(4, 1.0).is_err());
        assert!(FrequencyGrid::new(1, 1.0).is_err());
        assert!(FrequencyGrid::new(5, 0.0).is_err());
    }

    #[test]
    fn symmetric_about_zero() {
        let g = FrequencyGrid::new(9, 4.0).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.omega(4), 0.0);
        for m in 0..9 {
            assert_eq!(g.omega(g.mirror(m)), -g.omega(m));
        }
    }

    #[test]
    fn resolving_meets_spacing() {
        let g = FrequencyGrid::resolving(10.0, 0.3, 3).unwrap();
        assert!(g.spacing() <= 0.3);
        assert_eq!(g.n_points() % 2, 1);
        let coarser = FrequencyGrid::new(g.n_points() - 2, 10.0).unwrap();
        assert!(coarser.spacing() > 0.3);
    }
}
