use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FrequencyGrid, SpectralAmplitude};
use crate::simplex::{nelder_mead, SimplexOptions};
use crate::units::{CARRIER_WAVELENGTH, SPEED_OF_LIGHT};
use crate::{Error, Result};

/// Peak coupling times length of the design family used for the built-in sources.
pub const DESIGN_KAPPA_LENGTH: f64 = 6.0;
const DESIGN_ORDER: f64 = 2.0;
const DESIGN_WIDTH: f64 = 0.6;
const DEFAULT_SECTIONS: usize = 128;
/// exp(300) is far from overflow yet no physical grating gets near it.
const MAX_INTEGRATED_KAPPA: f64 = 300.0;

fn default_effective_index() -> f64 {
    1.447
}

/// Super-Gaussian apodized fiber Bragg grating.
///
/// `kappa(z) = peak_kappa * exp(-ln2 * |2 (z - L/2) / (w L)|^(2p))`; an absent
/// `order` means a uniform grating of length `w L` centered in the fiber.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[serde(deny_unknown_fields)]
pub struct FbgModel {
    /// [m]
    pub length: f64,
    pub n_sections: usize,
    /// [1/m]
    pub peak_kappa: f64,
    pub order: Option<f64>,
    pub width_fraction: f64,
    /// Angular-frequency offset of the Bragg resonance from the grid center [rad/s].
    pub detuning_offset: f64,
    /// [m]
    pub design_wavelength: f64,
    #[serde(default = "default_effective_index")]
    pub effective_index: f64,
}

impl FbgModel {
    /// Member of the built-in design family with |r|^2 FWHM equal to `bandwidth` [rad/s].
    pub fn design(bandwidth: f64) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::invalid("bandwidth must be positive"));
        }
        let unit = FbgModel {
            length: 1e-3,
            n_sections: DEFAULT_SECTIONS,
            peak_kappa: DESIGN_KAPPA_LENGTH / 1e-3,
            order: Some(DESIGN_ORDER),
            width_fraction: DESIGN_WIDTH,
            detuning_offset: 0.0,
            design_wavelength: CARRIER_WAVELENGTH,
            effective_index: default_effective_index(),
        };
        // response depends on delta*L and kappa*L only, so the width scales as 1/L
        let length = unit.length * unit.reflectance_fwhm()? / bandwidth;
        Ok(FbgModel { length, peak_kappa: DESIGN_KAPPA_LENGTH / length, ..unit })
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.length) {
            return Err(Error::invalid("FBG length must be positive"));
        }
        if self.n_sections < 16 {
            return Err(Error::invalid("FBG needs at least 16 sections"));
        }
        // zero coupling is allowed and reflects nothing
        if !(self.peak_kappa.is_finite() && self.peak_kappa >= 0.0) {
            return Err(Error::invalid("FBG peak kappa must be finite and >= 0"));
        }
        if let Some(p) = self.order {
            if !(p.is_finite() && p >= 1.0) {
                return Err(Error::invalid("super-Gaussian order must be >= 1"));
            }
        }
        if !(self.width_fraction > 0.0 && self.width_fraction <= 1.0) {
            return Err(Error::invalid("width fraction must lie in (0, 1]"));
        }
        if !self.detuning_offset.is_finite() {
            return Err(Error::NonFinite("detuning offset"));
        }
        if !pos(self.design_wavelength) || !pos(self.effective_index) {
            return Err(Error::invalid("design wavelength and effective index must be positive"));
        }
        Ok(())
    }

    fn kappa_profile(&self) -> Vec<f64> {
        let n = self.n_sections;
        (0..n)
            .map(|k| {
                let z = (k as f64 + 0.5) / n as f64;
                let x = (2.0 * (z - 0.5) / self.width_fraction).abs();
                match self.order {
                    Some(p) => self.peak_kappa * (-std::f64::consts::LN_2 * x.powf(2.0 * p)).exp(),
                    None if x <= 1.0 => self.peak_kappa,
                    None => 0.0,
                }
            })
            .collect()
    }

    fn check_strength(&self, profile: &[f64]) -> Result<()> {
        let dz = self.length / self.n_sections as f64;
        let integrated: f64 = profile.iter().sum::<f64>() * dz;
        if integrated > MAX_INTEGRATED_KAPPA {
            return Err(Error::InvalidModel(format!(
                "integrated coupling {integrated:.1} too large for the transfer-matrix chain"
            )));
        }
        Ok(())
    }

    /// Raw reflection and transmission amplitudes at `omega` [rad/s].
    pub fn transfer(&self, omega: f64) -> Result<(Complex64, Complex64)> {
        self.validate()?;
        let profile = self.kappa_profile();
        self.check_strength(&profile)?;
        self.transfer_with(&profile, omega)
    }

    fn transfer_with(&self, profile: &[f64], omega: f64) -> Result<(Complex64, Complex64)> {
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        let dz = self.length / self.n_sections as f64;
        let delta = self.effective_index * (omega - self.detuning_offset) / SPEED_OF_LIGHT;
        let (mut f11, mut f12, mut f21, mut f22) = (one, Complex64::default(), Complex64::default(), one);
        for &kappa in profile {
            let s = Complex64::new(kappa * kappa - delta * delta, 0.0).sqrt();
            let x = s * dz;
            let ch = x.cosh();
            let sh_s = if x.norm() < 1e-6 { (one + x * x / 6.0) * dz } else { x.sinh() / s };
            let a = ch - i * delta * sh_s;
            let b = -i * kappa * sh_s;
            let c = i * kappa * sh_s;
            let d = ch + i * delta * sh_s;
            (f11, f12, f21, f22) = (a * f11 + b * f21, a * f12 + b * f22, c * f11 + d * f21, c * f12 + d * f22);
        }
        let r = f21 / f11;
        let t = one / f11;
        if !(r.re.is_finite() && r.im.is_finite() && t.re.is_finite() && t.im.is_finite()) {
            return Err(Error::InvalidModel("transfer-matrix chain is not finite".into()));
        }
        Ok((r, t))
    }

    /// |r|^2 at each `omega`.
    pub fn reflectance(&self, omegas: &[f64]) -> Result<Vec<f64>> {
        self.validate()?;
        let profile = self.kappa_profile();
        self.check_strength(&profile)?;
        omegas.iter().map(|&w| Ok(self.transfer_with(&profile, w)?.0.norm_sqr())).collect()
    }

    /// FWHM of |r|^2 around the resonance [rad/s], assuming the peak sits there.
    pub fn reflectance_fwhm(&self) -> Result<f64> {
        let center = self.detuning_offset;
        let peak = self.reflectance(&[center])?[0];
        if peak <= 0.0 {
            return Err(Error::invalid("grating does not reflect"));
        }
        let scale = SPEED_OF_LIGHT / (self.effective_index * self.length);
        let half_width = |sign: f64| -> Result<f64> {
            let at = |d: f64| -> Result<f64> { Ok(self.reflectance(&[center + sign * d])?[0]) };
            let step = 0.05 * scale;
            let mut hi = step;
            while at(hi)? >= 0.5 * peak {
                hi += step;
                if hi > 1e4 * scale {
                    return Err(Error::FwhmNotBracketed("reflectance"));
                }
            }
            let mut lo = hi - step;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if at(mid)? >= 0.5 * peak {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(0.5 * (lo + hi))
        };
        Ok(half_width(1.0)? + half_width(-1.0)?)
    }
}

/// Power-weighted mean group delay of the reflection, i.e. the centroid of
/// the reflected impulse response [s].
fn mean_group_delay(model: &FbgModel, profile: &[f64]) -> Result<f64> {
    let peak = model.transfer_with(profile, model.detuning_offset)?.0.norm();
    if peak < 1e-12 {
        return Ok(0.0);
    }
    // a weak grating's band is set by its length, a strong one's by kappa
    let scale = SPEED_OF_LIGHT / (model.effective_index * model.length);
    let half = 8.0 * scale.max(model.peak_kappa * SPEED_OF_LIGHT / model.effective_index);
    let n = 4001;
    let step = 2.0 * half / (n - 1) as f64;
    let r = (0..n)
        .into_par_iter()
        .map(|k| Ok(model.transfer_with(profile, model.detuning_offset - half + k as f64 * step)?.0))
        .collect::<Result<Vec<_>>>()?;
    let (mut num, mut den) = (0.0, 0.0);
    for w in r.windows(2) {
        let weight = w[0].norm() * w[1].norm();
        if weight > 0.0 {
            num += weight * (w[1] * w[0].conj()).arg() / step;
            den += weight;
        }
    }
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

/// Complex reflection amplitude on `grid` with the mean group delay removed:
/// a constant delay is a fiber length, not a filter property, and the photon
/// arrival time is referenced to the centroid of its wave packet.
pub fn fbg_response(model: &FbgModel, grid: &FrequencyGrid) -> Result<SpectralAmplitude> {
    model.validate()?;
    let profile = model.kappa_profile();
    model.check_strength(&profile)?;
    let raw = grid.values().par_iter().map(|&w| Ok(model.transfer_with(&profile, w)?.0)).collect::<Result<Vec<_>>>()?;

    let center = model.detuning_offset;
    let delay = mean_group_delay(model, &profile)?;
    let amp = raw
        .into_iter()
        .zip(grid.values())
        .map(|(r, w)| r * Complex64::from_polar(1.0, -delay * (w - center)))
        .collect();
    SpectralAmplitude::new(*grid, amp)
}

/// One measured reflectance point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectanceSample {
    /// [rad/s]
    pub omega: f64,
    pub reflectance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FbgFit {
    pub model: FbgModel,
    pub residual: f64,
    pub seed_residual: f64,
    pub iterations: usize,
}

const RESTARTS: usize = 3;

/// Least-squares fit of |r|^2 to `measured`, starting from `seed`.
///
/// Free parameters: peak coupling, length, order (unless uniform), width
/// fraction and detuning offset. One simplex run starts at the seed and
/// `RESTARTS` more start at random perturbations of it; the lowest residual
/// wins, ties going to fewer iterations.
pub fn fit_fbg(measured: &[ReflectanceSample], seed: &FbgModel, rng_seed: u64) -> Result<FbgFit> {
    seed.validate()?;
    if measured.len() < 20 {
        return Err(Error::invalid(format!("need >= 20 measurement points, got {}", measured.len())));
    }
    if measured.iter().any(|s| !(s.omega.is_finite() && s.reflectance.is_finite())) {
        return Err(Error::NonFinite("measured reflectance"));
    }
    if measured.iter().any(|s| !(0.0..=1.0).contains(&s.reflectance)) {
        return Err(Error::invalid("measured reflectance outside [0, 1]"));
    }
    let first = measured[0].reflectance;
    if measured.iter().all(|s| s.reflectance == first) {
        return Err(Error::invalid("degenerate table: all reflectance values equal"));
    }

    let omegas: Vec<f64> = measured.iter().map(|s| s.omega).collect();
    let residual = |m: &FbgModel| -> f64 {
        match m.reflectance(&omegas) {
            Ok(r) => r.iter().zip(measured).map(|(a, s)| (a - s.reflectance).powi(2)).sum(),
            Err(_) => f64::INFINITY,
        }
    };
    let scale = SPEED_OF_LIGHT / (seed.effective_index * seed.length);
    let uniform = seed.order.is_none();

    let encode = |m: &FbgModel| -> Vec<f64> {
        let mut x = vec![m.peak_kappa.max(1e-300).ln(), m.length.ln(), m.width_fraction, m.detuning_offset / scale];
        if let Some(p) = m.order {
            x.push(p);
        }
        x
    };
    let decode = |x: &[f64]| -> Option<FbgModel> {
        let m = FbgModel {
            peak_kappa: x[0].exp(),
            length: x[1].exp(),
            width_fraction: x[2],
            detuning_offset: x[3] * scale,
            order: if uniform { None } else { Some(x[4]) },
            ..seed.clone()
        };
        m.validate().ok().map(|_| m)
    };
    let objective = |x: &[f64]| decode(x).map_or(f64::INFINITY, |m| residual(&m));

    let x_seed = encode(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut starts = vec![x_seed.clone()];
    for _ in 0..RESTARTS {
        let mut x = x_seed.clone();
        x[0] += rng.random_range(-0.1..0.1);
        x[1] += rng.random_range(-0.1..0.1);
        x[2] = (x[2] * (1.0 + rng.random_range(-0.05..0.05))).min(1.0);
        x[3] += rng.random_range(-0.05..0.05);
        if !uniform {
            x[4] = (x[4] * (1.0 + rng.random_range(-0.1..0.1))).max(1.0);
        }
        starts.push(x);
    }

    let opts = SimplexOptions { max_iterations: 3000, f_tol: 1e-10, f_floor: 1e-12, x_tol: 1e-8 };
    let runs: Vec<(Vec<f64>, f64, usize)> = starts
        .par_iter()
        .map(|x0| {
            let step: Vec<f64> = x0
                .iter()
                .enumerate()
                .map(|(k, &v)| match k {
                    2 if v + 0.05 > 1.0 => -0.05,
                    2 => 0.05,
                    4 => 0.1 * v,
                    _ => 0.05,
                })
                .collect();
            let first = nelder_mead(objective, x0, &step, opts);
            // one restart from the converged point guards against simplex collapse
            let small: Vec<f64> = step.iter().map(|s| 0.2 * s).collect();
            let second = nelder_mead(objective, &first.x, &small, opts);
            (second.x, second.value, first.iterations + second.iterations)
        })
        .collect();

    let best = runs.into_iter().min_by(|a, b| a.1.total_cmp(&b.1).then(a.2.cmp(&b.2))).expect("at least one run");
    let model = decode(&best.0).expect("simplex returns a feasible point");
    Ok(FbgFit { model, residual: best.1, seed_residual: residual(seed), iterations: best.2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::pm_to_angular;
    use approx::assert_relative_eq;

    fn uniform(kappa_l: f64) -> FbgModel {
        FbgModel {
            length: 10e-3,
            n_sections: 64,
            peak_kappa: kappa_l / 10e-3,
            order: None,
            width_fraction: 1.0,
            detuning_offset: 0.0,
            design_wavelength: CARRIER_WAVELENGTH,
            effective_index: 1.447,
        }
    }

    #[test]
    fn zero_coupling_reflects_nothing() {
        let g = FrequencyGrid::new(101, 1e11).unwrap();
        let r = fbg_response(&uniform(0.0), &g).unwrap();
        assert!(r.values().iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn uniform_resonance_is_tanh_squared() {
        for kl in [0.5, 1.0, 2.5, 6.0] {
            let mut m = uniform(kl);
            m.detuning_offset = 3e9;
            let (r, _) = m.transfer(3e9).unwrap();
            assert_relative_eq!(r.norm_sqr(), kl.tanh().powi(2), max_relative = 1e-12);
        }
    }

    #[test]
    fn uniform_off_resonance_matches_closed_form() {
        // r = -i k sinh(sL) / (s cosh(sL) + i d sinh(sL)) up to a phase, s^2 = k^2 - d^2
        let m = uniform(2.0);
        let (k, l) = (m.peak_kappa, m.length);
        for omega in [1e9, 5e9, 2e10] {
            let d = m.effective_index * omega / SPEED_OF_LIGHT;
            let s = Complex64::new(k * k - d * d, 0.0).sqrt();
            let num = (s * l).sinh() * k;
            let den = s * (s * l).cosh() + Complex64::i() * d * (s * l).sinh();
            let expect = (num / den).norm_sqr();
            let (r, _) = m.transfer(omega).unwrap();
            assert_relative_eq!(r.norm_sqr(), expect, max_relative = 1e-10);
        }
    }

    #[test]
    fn lossless_energy_balance() {
        let m = FbgModel::design(pm_to_angular(41.0)).unwrap();
        for k in -50..=50 {
            let (r, t) = m.transfer(k as f64 * 1e9).unwrap();
            assert!((r.norm_sqr() + t.norm_sqr() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn design_hits_bandwidth() {
        let w = pm_to_angular(27.0);
        let m = FbgModel::design(w).unwrap();
        assert_relative_eq!(m.reflectance_fwhm().unwrap(), w, max_relative = 1e-6);
        assert_relative_eq!(m.peak_kappa * m.length, DESIGN_KAPPA_LENGTH, max_relative = 1e-12);
    }

    #[test]
    fn refuses_overflowing_grating() {
        let mut m = uniform(1.0);
        m.peak_kappa = 1e6;
        assert!(matches!(m.transfer(0.0), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn impulse_response_centred() {
        // oracle: centroid of |h(t)|^2 from an inverse FFT of the response
        let bw = pm_to_angular(41.0);
        let m = FbgModel::design(bw).unwrap();
        let g = FrequencyGrid::new(8193, 16.0 * bw).unwrap();
        let r = fbg_response(&m, &g).unwrap();
        let n = g.n_points();
        let mut buf = r.values().to_vec();
        rustfft::FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        let period = 2.0 * std::f64::consts::PI / g.spacing();
        let (mut num, mut den) = (0.0, 0.0);
        for (k, h) in buf.iter().enumerate() {
            let k = if k > n / 2 { k as f64 - n as f64 } else { k as f64 };
            num += k / n as f64 * period * h.norm_sqr();
            den += h.norm_sqr();
        }
        let centroid = num / den;
        assert!(centroid.abs() < 0.2e-12, "centroid {centroid}");
    }

    fn trace(model: &FbgModel, points: usize) -> Vec<ReflectanceSample> {
        let half = 2.0 * model.reflectance_fwhm().unwrap();
        let omegas: Vec<f64> = (0..points).map(|k| -half + 2.0 * half * k as f64 / (points - 1) as f64).collect();
        let r = model.reflectance(&omegas).unwrap();
        omegas.into_iter().zip(r).map(|(omega, reflectance)| ReflectanceSample { omega, reflectance }).collect()
    }

    #[test]
    fn fit_recovers_perturbed_design() {
        let truth = FbgModel::design(pm_to_angular(30.0)).unwrap();
        let seed = FbgModel {
            length: truth.length * 1.05,
            peak_kappa: truth.peak_kappa * 0.95,
            width_fraction: 0.55,
            ..truth.clone()
        };
        let fit = fit_fbg(&trace(&truth, 61), &seed, 3).unwrap();
        assert!(fit.residual < 1e-10 && fit.residual < fit.seed_residual, "{fit:?}");
        assert_relative_eq!(
            fit.model.reflectance_fwhm().unwrap(),
            truth.reflectance_fwhm().unwrap(),
            max_relative = 1e-4
        );
    }

    #[test]
    fn fit_from_truth_stays_there() {
        let truth = FbgModel::design(pm_to_angular(30.0)).unwrap();
        let fit = fit_fbg(&trace(&truth, 41), &truth, 0).unwrap();
        // the log-encoded parameters round-trip only to machine precision
        assert!(fit.seed_residual < 1e-28);
        assert!(fit.residual < 1e-24, "{fit:?}");
    }

    #[test]
    fn fit_rejects_bad_tables() {
        let m = FbgModel::design(pm_to_angular(30.0)).unwrap();
        let t = trace(&m, 41);
        assert!(fit_fbg(&t[..10], &m, 0).is_err());
        let mut high = t.clone();
        high[3].reflectance = 1.5;
        assert!(fit_fbg(&high, &m, 0).is_err());
        let flat: Vec<_> = t.iter().map(|s| ReflectanceSample { reflectance: 0.2, ..*s }).collect();
        assert!(fit_fbg(&flat, &m, 0).is_err());
    }

    #[test]
    fn section_count_converges() {
        let coarse = FbgModel::design(pm_to_angular(41.0)).unwrap();
        let fine = FbgModel { n_sections: 1024, ..coarse.clone() };
        assert_relative_eq!(coarse.reflectance_fwhm().unwrap(), fine.reflectance_fwhm().unwrap(), max_relative = 2e-3);
    }

    #[test]
    fn model_json_round_trip() {
        let m = uniform(1.0);
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"order\":null"));
        let back: FbgModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
