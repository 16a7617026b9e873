#![allow(dead_code)]

use cwhom::interference::max_grid_spacing;
use cwhom::spectral::*;
use cwhom::units::pm_to_angular;
use num_complex::Complex64;
use rustfft::FftPlanner;

/// (signal, idler) grating bandwidths [pm].
pub const SOURCE_A_PM: (f64, f64) = (41.0, 27.0);
pub const SOURCE_B_PM: (f64, f64) = (44.0, 41.0);

/// Grid for the grating sources, fine enough for time scales up to `t_max`.
pub fn fbg_grid(t_max: f64) -> FrequencyGrid {
    FrequencyGrid::resolving(8.0 * pm_to_angular(44.0), max_grid_spacing(1.1 * t_max), 1025).unwrap()
}

pub fn source_from_models(signal: &FbgModel, idler: &FbgModel, grid: &FrequencyGrid) -> JointSpectralAmplitude {
    let fs = fbg_response(signal, grid).unwrap();
    let fi = fbg_response(idler, grid).unwrap();
    joint_spectral_amplitude(&fs, &fi, None).unwrap()
}

pub fn fbg_source(pm: (f64, f64), grid: &FrequencyGrid) -> JointSpectralAmplitude {
    let m = |p: f64| FbgModel::design(pm_to_angular(p)).unwrap();
    source_from_models(&m(pm.0), &m(pm.1), grid)
}

/// Reflectance of `model` sampled like a spectrum-analyzer trace.
pub fn synthetic_trace(model: &FbgModel, points: usize) -> Vec<ReflectanceSample> {
    let bw = model.reflectance_fwhm().unwrap();
    let omegas: Vec<f64> = (0..points).map(|k| -2.0 * bw + 4.0 * bw * k as f64 / (points - 1) as f64).collect();
    let r = model.reflectance(&omegas).unwrap();
    omegas.into_iter().zip(r).map(|(omega, reflectance)| ReflectanceSample { omega, reflectance }).collect()
}

/// FWHM of |sum_m J_m exp(-i Omega_m tau)|^2 from a zero-padded FFT, with
/// linear interpolation at the half-maximum crossings.
pub fn fft_coherence_fwhm(jsa: &JointSpectralAmplitude, pad: usize) -> f64 {
    let n = jsa.grid().n_points();
    let big = n * pad;
    let mut buf: Vec<Complex64> = jsa.values().to_vec();
    buf.resize(big, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(big).process(&mut buf);
    let g: Vec<f64> = buf.iter().map(|z| z.norm_sqr()).collect();
    let dt = 2.0 * std::f64::consts::PI / (big as f64 * jsa.grid().spacing());
    let peak_i = (0..big).max_by(|&a, &b| g[a].total_cmp(&g[b])).unwrap();
    let half = 0.5 * g[peak_i];
    let at = |k: isize| g[k.rem_euclid(big as isize) as usize];
    let crossing = |dir: isize| {
        let mut k = peak_i as isize;
        while at(k + dir) >= half {
            k += dir;
        }
        let (v0, v1) = (at(k), at(k + dir));
        (k - peak_i as isize) as f64 + dir as f64 * (v0 - half) / (v0 - v1)
    };
    (crossing(1) - crossing(-1)) * dt
}
