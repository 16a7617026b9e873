use num_complex::Complex64;

use super::{make_filter, FilterShape, FrequencyGrid, SpectralAmplitude};
use crate::{Error, Result};

/// T_c * W for a rectangular JSA of angular width W: the FWHM of
/// sinc^2(W tau / 2) is 4 x_h / W with sinc^2(x_h) = 1/2.
pub const SINC_SQ_FWHM_PRODUCT: f64 = 5.566_229_513_006_04;

/// Angular width of the rectangular JSA whose coherence time is `tc` [s].
pub fn rect_width_for_coherence_time(tc: f64) -> f64 {
    SINC_SQ_FWHM_PRODUCT / tc
}

/// `J(Omega) = F_s(Omega) F_i(-Omega) Phi(Omega)`, normalized to max |J| = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct JointSpectralAmplitude {
    grid: FrequencyGrid,
    values: Vec<Complex64>,
}

impl JointSpectralAmplitude {
    /// Normalizes arbitrary samples to unit peak modulus.
    pub fn from_values(grid: FrequencyGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::invalid("JSA length does not match grid"));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite("joint spectral amplitude"));
        }
        let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return Err(Error::invalid("joint spectral amplitude is identically zero"));
        }
        let values = values.into_iter().map(|v| v / peak).collect();
        Ok(JointSpectralAmplitude { grid, values })
    }

    /// Identical rectangular signal and idler filters giving coherence time `tc`.
    pub fn rect_with_coherence_time(grid: FrequencyGrid, tc: f64) -> Result<Self> {
        if !(tc.is_finite() && tc > 0.0) {
            return Err(Error::invalid("coherence time must be positive"));
        }
        let f = make_filter(&FilterShape::Rect { fwhm: rect_width_for_coherence_time(tc) }, &grid)?;
        joint_spectral_amplitude(&f, &f, None)
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Same JSA times a complex constant, without renormalizing.
    pub fn scaled(&self, factor: Complex64) -> Self {
        JointSpectralAmplitude { grid: self.grid, values: self.values.iter().map(|v| v * factor).collect() }
    }
}

/// Node-wise product `F_s(Omega) F_i(-Omega) Phi(Omega)` without normalization.
pub fn joint_spectral_amplitude_unnormalized(
    signal: &SpectralAmplitude,
    idler: &SpectralAmplitude,
    pump_envelope: Option<&SpectralAmplitude>,
) -> Result<Vec<Complex64>> {
    let grid = signal.grid();
    for (name, other) in [("idler", Some(idler)), ("pump envelope", pump_envelope)] {
        if let Some(o) = other {
            if !grid.same_as(o.grid()) {
                return Err(Error::GridMismatch(format!("signal vs {name}")));
            }
        }
    }
    let (s, i) = (signal.values(), idler.values());
    Ok((0..grid.n_points())
        .map(|m| {
            let phi = pump_envelope.map_or(Complex64::new(1.0, 0.0), |p| p.values()[m]);
            s[m] * i[grid.mirror(m)] * phi
        })
        .collect())
}

pub fn joint_spectral_amplitude(
    signal: &SpectralAmplitude,
    idler: &SpectralAmplitude,
    pump_envelope: Option<&SpectralAmplitude>,
) -> Result<JointSpectralAmplitude> {
    let values = joint_spectral_amplitude_unnormalized(signal, idler, pump_envelope)?;
    JointSpectralAmplitude::from_values(*signal.grid(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::sinc;

    #[test]
    fn sinc_sq_half_power_constant() {
        // independent bisection for sinc^2(x) = 1/2 on (0, pi/2)
        let (mut lo, mut hi) = (0.5f64, 2.0f64);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if sinc(mid).powi(2) > 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((4.0 * lo - SINC_SQ_FWHM_PRODUCT).abs() < 1e-12);
    }

    #[test]
    fn equal_rects_give_same_rect() {
        let g = FrequencyGrid::new(201, 10.0).unwrap();
        // band edges on cell boundaries, so no node is partially covered
        let f = make_filter(&FilterShape::Rect { fwhm: 4.1 }, &g).unwrap();
        let j = joint_spectral_amplitude(&f, &f, None).unwrap();
        for (a, b) in j.values().iter().zip(f.values()) {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn narrower_rect_wins() {
        let g = FrequencyGrid::new(201, 10.0).unwrap();
        let narrow = make_filter(&FilterShape::Rect { fwhm: 2.1 }, &g).unwrap();
        let wide = make_filter(&FilterShape::Rect { fwhm: 6.0 }, &g).unwrap();
        let j = joint_spectral_amplitude(&narrow, &wide, None).unwrap();
        for (a, b) in j.values().iter().zip(narrow.values()) {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn idler_is_reflected() {
        let g = FrequencyGrid::new(5, 2.0).unwrap();
        let s = SpectralAmplitude::new(g, vec![Complex64::new(1.0, 0.0); 5]).unwrap();
        let i = SpectralAmplitude::new(g, (0..5).map(|k| Complex64::new(0.1 * k as f64, 0.0)).collect()).unwrap();
        let j = joint_spectral_amplitude_unnormalized(&s, &i, None).unwrap();
        assert_eq!(j[0].re, 0.4);
        assert_eq!(j[4].re, 0.0);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = make_filter(&FilterShape::Rect { fwhm: 1.0 }, &FrequencyGrid::new(11, 5.0).unwrap()).unwrap();
        let b = make_filter(&FilterShape::Rect { fwhm: 1.0 }, &FrequencyGrid::new(13, 5.0).unwrap()).unwrap();
        assert!(matches!(joint_spectral_amplitude(&a, &b, None), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn bilinear_before_normalization() {
        let g = FrequencyGrid::new(101, 10.0).unwrap();
        let s = make_filter(&FilterShape::Gaussian { fwhm: 3.0 }, &g).unwrap();
        let i = make_filter(&FilterShape::Lorentzian { fwhm: 2.0 }, &g).unwrap();
        let k = Complex64::new(0.3, -0.4);
        let base = joint_spectral_amplitude_unnormalized(&s, &i, None).unwrap();
        let scaled = joint_spectral_amplitude_unnormalized(&s.scaled(k).unwrap(), &i, None).unwrap();
        for (a, b) in base.iter().zip(&scaled) {
            assert!((a * k - b).norm() < 1e-15);
        }
    }
}
