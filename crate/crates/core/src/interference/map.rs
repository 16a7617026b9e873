use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{coherence_time, max_grid_spacing, visibility_of, CoincidenceConfig, InterferenceSetup};
use crate::detection::DetectorModel;
use crate::spectral::{joint_spectral_amplitude, make_filter, FilterShape, FrequencyGrid, SINC_SQ_FWHM_PRODUCT};
use crate::units::to_ps;
use crate::{Error, Result};

/// BS window for a map cell: long enough that the plateau is reliable for
/// coherence time `tc` and detector jitter `jitter`.
pub fn map_tau_23(tc: f64, jitter: f64) -> f64 {
    (16.0 * tc).max(8.0 * jitter + 4.0 * tc)
}

/// Zero-phase filter shape shared by signal and idler of identical sources.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[serde(rename_all = "lowercase")]
pub enum SourceShape {
    Rect,
    Gaussian,
    Lorentzian,
}

impl SourceShape {
    /// `T_c * W` for filters of |F|^2 FWHM `W` on both photons.
    pub fn fwhm_product(self) -> f64 {
        let ln2 = std::f64::consts::LN_2;
        match self {
            SourceShape::Rect => SINC_SQ_FWHM_PRODUCT,
            SourceShape::Gaussian => 2.0 * 8f64.sqrt() * ln2,
            SourceShape::Lorentzian => 2.0 * ln2,
        }
    }

    /// Grid half-width in units of the filter FWHM.
    pub fn span_factor(self) -> f64 {
        match self {
            SourceShape::Rect => 1.0,
            SourceShape::Gaussian => 3.0,
            SourceShape::Lorentzian => 8.0,
        }
    }

    pub fn filter(self, fwhm: f64) -> FilterShape {
        match self {
            SourceShape::Rect => FilterShape::Rect { fwhm },
            SourceShape::Gaussian => FilterShape::Gaussian { fwhm },
            SourceShape::Lorentzian => FilterShape::Lorentzian { fwhm },
        }
    }
}

/// Two identical sources of coherence time `tc` on a grid fine enough for
/// the windows, the plateau and delays up to `max_abs_tau`.
pub fn identical_source_setup(
    shape: SourceShape,
    tc: f64,
    detectors: DetectorModel,
    windows: CoincidenceConfig,
    max_abs_tau: f64,
) -> Result<InterferenceSetup> {
    if !(tc.is_finite() && tc > 0.0) {
        return Err(Error::invalid("coherence time must be positive"));
    }
    windows.validate()?;
    let plateau = (3.0 * tc).max(3.0 * detectors.max_jitter());
    // margin covers the discrete coherence time exceeding the nominal one
    let t_max = 1.1 * windows.tau_14.max(windows.tau_23).max(tc).max(plateau).max(max_abs_tau.abs());
    let (fwhm, grid) = calibrated_filter(shape, tc, t_max)?;
    let f = make_filter(&shape.filter(fwhm), &grid)?;
    let jsa = joint_spectral_amplitude(&f, &f, None)?;
    InterferenceSetup::new(jsa.clone(), jsa, detectors, windows)
}

/// Filter FWHM [rad/s] for which identical filters on both photons give
/// coherence time `tc` on the returned grid, which resolves time scales up
/// to `t_max`.
///
/// The closed-form width is exact only for untruncated spectra; the
/// Lorentzian's slow tails are cut by any finite grid, which widens its
/// coherence time by several percent, so the width is corrected until the
/// discrete value is within 0.1 %.
pub fn calibrated_filter(shape: SourceShape, tc: f64, t_max: f64) -> Result<(f64, FrequencyGrid)> {
    if !(tc.is_finite() && tc > 0.0) {
        return Err(Error::invalid("coherence time must be positive"));
    }
    let fwhm = shape.fwhm_product() / tc;
    // the margin leaves room for the correction
    let grid = FrequencyGrid::resolving(1.25 * shape.span_factor() * fwhm, max_grid_spacing(t_max.max(1.1 * tc)), 65)?;
    Ok((calibrate_on_grid(shape, tc, &grid)?, grid))
}

/// As [`calibrated_filter`], on a given grid. The correction only holds on
/// the grid it was computed for.
pub fn calibrate_on_grid(shape: SourceShape, tc: f64, grid: &FrequencyGrid) -> Result<f64> {
    if !(tc.is_finite() && tc > 0.0) {
        return Err(Error::invalid("coherence time must be positive"));
    }
    let max_spacing = max_grid_spacing(tc);
    if grid.spacing() > max_spacing * (1.0 + 1e-12) {
        let required_points = FrequencyGrid::resolving(grid.span(), max_spacing, 3)?.n_points();
        return Err(Error::Resolution { spacing: grid.spacing(), max_spacing, required_points });
    }
    // a fixed grid keeps the discrete coherence time continuous in the width
    let mut fwhm = shape.fwhm_product() / tc;
    for _ in 0..8 {
        let f = make_filter(&shape.filter(fwhm), grid)?;
        let actual = coherence_time(&joint_spectral_amplitude(&f, &f, None)?, 0.0, 0.0)?;
        if (actual / tc - 1.0).abs() <= 1e-3 {
            return Ok(fwhm);
        }
        fwhm *= actual / tc;
    }
    Err(Error::invalid(format!("no {shape:?} filter reaches a coherence time of {tc:e} s on this grid")))
}

/// Visibility over (T_c, tau_14) for identical sources with common jitter.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VisibilityMap {
    /// [s]
    pub tc_values: Vec<f64>,
    /// [s]
    pub tau14_values: Vec<f64>,
    /// `values[i][k]` at `tc_values[i]`, `tau14_values[k]`.
    pub values: Vec<Vec<f64>>,
}

impl VisibilityMap {
    /// Matrix CSV: corner cell, tau_14 in ps across, T_c in ps down.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["tc_ps\\tau14_ps".to_string()];
        header.extend(self.tau14_values.iter().map(|t| to_ps(*t).to_string()));
        w.write_record(&header)?;
        for (tc, row) in self.tc_values.iter().zip(&self.values) {
            let mut rec = vec![to_ps(*tc).to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Every cell uses `tau_23 = map_tau_23(T_c, jitter)` and no accidentals.
pub fn visibility_map(
    tc_values: &[f64],
    tau14_values: &[f64],
    jitter: f64,
    shape: SourceShape,
) -> Result<VisibilityMap> {
    if tc_values.is_empty() || tau14_values.is_empty() {
        return Err(Error::invalid("visibility map needs at least one T_c and one tau_14"));
    }
    let detectors = DetectorModel::uniform(jitter)?;
    let cells: Vec<(usize, usize)> =
        (0..tc_values.len()).flat_map(|i| (0..tau14_values.len()).map(move |k| (i, k))).collect();
    let flat = cells
        .par_iter()
        .map(|&(i, k)| {
            let tc = tc_values[i];
            let windows = CoincidenceConfig::new(tau14_values[k], map_tau_23(tc, jitter))?;
            visibility_of(&identical_source_setup(shape, tc, detectors, windows, 0.0)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let values = flat.chunks(tau14_values.len()).map(|c| c.to_vec()).collect();
    Ok(VisibilityMap { tc_values: tc_values.to_vec(), tau14_values: tau14_values.to_vec(), values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interference::plateau_rule;
    use crate::units::{pm_to_angular, ps};

    #[test]
    fn map_window_keeps_plateau_reliable() {
        for tc in [20.0, 100.0, 400.0] {
            for j in [0.0, 15.0, 50.0, 200.0] {
                let windows = CoincidenceConfig::new(ps(40.0), map_tau_23(ps(tc), ps(j))).unwrap();
                let setup = identical_source_setup(
                    SourceShape::Rect,
                    ps(tc),
                    DetectorModel::uniform(ps(j)).unwrap(),
                    windows,
                    0.0,
                )
                .unwrap();
                let rule = plateau_rule(&setup);
                assert!(rule.reliable, "tc {tc} j {j}: {:?}", rule.reason);
            }
        }
    }

    #[test]
    fn calibration_refuses_coarse_grid() {
        let grid = FrequencyGrid::new(21, pm_to_angular(200.0)).unwrap();
        let e = calibrate_on_grid(SourceShape::Rect, ps(165.0), &grid).unwrap_err();
        assert!(e.is_numerical_refusal(), "{e}");
    }

    #[test]
    fn identical_setup_hits_coherence_time() {
        let windows = CoincidenceConfig::new(ps(40.0), ps(2000.0)).unwrap();
        for shape in [SourceShape::Rect, SourceShape::Gaussian, SourceShape::Lorentzian] {
            let s = identical_source_setup(shape, ps(165.0), DetectorModel::default(), windows, 0.0).unwrap();
            let (a, b) = s.coherence_times();
            assert_eq!(a, b);
            assert!((a / ps(165.0) - 1.0).abs() < 0.01, "{shape:?}: {a:e}");
        }
    }

    #[test]
    fn map_shape_and_trends() {
        let tcs = [ps(100.0), ps(200.0)];
        let taus = [ps(50.0), ps(100.0), ps(150.0)];
        let m = visibility_map(&tcs, &taus, ps(50.0), SourceShape::Rect).unwrap();
        assert_eq!(m.values.len(), 2);
        assert!(m.values.iter().all(|r| r.len() == 3));
        for row in &m.values {
            assert!(row.windows(2).all(|w| w[1] < w[0]));
        }
        assert!((0..3).all(|k| m.values[1][k] > m.values[0][k]));

        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("tc_ps\\tau14_ps,50,100,150\n100,"));
    }

    #[test]
    fn map_rejects_empty_axes() {
        assert!(visibility_map(&[], &[ps(10.0)], 0.0, SourceShape::Rect).is_err());
        assert!(visibility_map(&[ps(10.0)], &[], 0.0, SourceShape::Rect).is_err());
    }
}
