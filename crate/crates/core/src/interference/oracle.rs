use std::f64::consts::PI;

use num_complex::Complex64;

use super::InterferenceSetup;
use crate::linalg::CMat;
use crate::spectral::JointSpectralAmplitude;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OracleOptions {
    /// Trapezoid step [s]; by default a fraction of the fastest oscillation
    /// period of the pair amplitude and of the smallest jitter.
    pub time_step: Option<f64>,
}

/// Trapezoid nodes on one time axis and their weights, the window already
/// folded in. A Gaussian jitter turns the sharp window `[a, b]` into the
/// probability that the jittered time lands inside it.
fn axis(a: f64, b: f64, sigma: f64, h: f64) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = (a - 8.0 * sigma, b + 8.0 * sigma);
    let n = ((hi - lo) / h).ceil().max(1.0) as usize;
    let step = (hi - lo) / n as f64;
    let t: Vec<f64> = (0..=n).map(|k| lo + k as f64 * step).collect();
    let w = t
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let trap = if k == 0 || k == n { 0.5 * step } else { step };
            let window = if sigma == 0.0 {
                1.0
            } else {
                let s = sigma * 2f64.sqrt();
                0.5 * (libm::erf((x - a) / s) - libm::erf((x - b) / s))
            };
            trap * window
        })
        .collect();
    (t, w)
}

/// Trigger axis: the true channel-1 time is Gaussian around the recorded 0.
fn trigger_axis(sigma: f64, h: f64) -> (Vec<f64>, Vec<f64>) {
    if sigma == 0.0 {
        return (vec![0.0], vec![1.0]);
    }
    let (t, trap) = axis(-8.0 * sigma, 8.0 * sigma, 0.0, h);
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
    let w = t.iter().zip(trap).map(|(&x, tw)| tw * norm * (-0.5 * (x / sigma).powi(2)).exp()).collect();
    (t, w)
}

/// `psi(t_r - t_c) = sum_m J_m exp(-i Omega_m (t_r - t_c)) dOmega` for all pairs.
fn pair_amplitude(jsa: &JointSpectralAmplitude, rows: &[f64], cols: &[f64]) -> CMat {
    let g = jsa.grid();
    let w = g.values();
    let j = jsa.values();
    let dw = g.spacing();
    let left = CMat::from_fn(rows.len(), w.len(), |r, m| j[m] * Complex64::from_polar(dw, -w[m] * rows[r]));
    let right = CMat::from_fn(w.len(), cols.len(), |m, c| Complex64::from_polar(1.0, w[m] * cols[c]));
    left.matmul(&right)
}

/// `sum_{r,c} wr_r |A_rc|^2 wc_c`
fn weighted_intensity(a: &CMat, wr: &[f64], wc: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (r, x) in wr.iter().enumerate() {
        for (c, y) in wc.iter().enumerate() {
            acc += x * a.get(r, c).norm_sqr() * y;
        }
    }
    acc
}

/// `out[r,s] = sum_k a[r,k] w_k conj(b[s,k])`
fn contract_conj(a: &CMat, w: &[f64], b: &CMat) -> CMat {
    let aw = CMat::from_fn(a.rows(), a.cols(), |r, k| a.get(r, k) * w[k]);
    let bh = CMat::from_fn(b.cols(), b.rows(), |k, s| b.get(s, k).conj());
    aw.matmul(&bh)
}

/// Time-domain four-photon probability: pair amplitudes in time, the
/// antisymmetrized four-time density, trapezoid integration over the windows.
pub fn fourfold_probability_oracle(setup: &InterferenceSetup, tau: f64, opts: OracleOptions) -> Result<f64> {
    if !tau.is_finite() {
        return Err(Error::NonFinite("delay"));
    }
    let grid = *setup.grid();
    let period = 2.0 * PI / grid.spacing();
    let (t14, t23) = (setup.windows.tau_14, setup.windows.tau_23);
    let required = 2.0 * (tau.abs() + t23 + 5.0 * setup.max_coherence_time());
    if period <= required {
        return Err(Error::Aliasing { span: period, required });
    }

    let sig: Vec<f64> = (0..4).map(|k| setup.detectors.sigma(k)).collect();
    let h = opts.time_step.unwrap_or_else(|| {
        let mut h = 2.0 * PI / grid.span() / 48.0;
        for &s in sig.iter().filter(|s| **s > 0.0) {
            h = h.min(s / 3.0);
        }
        h
    });
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::invalid("oracle time step must be positive"));
    }

    let (t1, w1) = trigger_axis(sig[0], h);
    let (t2, w2) = axis(-t23 / 2.0, t23 / 2.0, sig[1], h);
    let (t3, w3) = axis(-t23 / 2.0, t23 / 2.0, sig[2], h);
    let (t4, w4) = axis(tau - t14 / 2.0, tau + t14 / 2.0, sig[3], h);

    let a12 = pair_amplitude(&setup.jsa_a, &t1, &t2);
    let a13 = pair_amplitude(&setup.jsa_a, &t1, &t3);
    let b43 = pair_amplitude(&setup.jsa_b, &t4, &t3);
    let b42 = pair_amplitude(&setup.jsa_b, &t4, &t2);

    let direct = weighted_intensity(&a12, &w1, &w2) * weighted_intensity(&b43, &w4, &w3)
        + weighted_intensity(&a13, &w1, &w3) * weighted_intensity(&b42, &w4, &w2);
    let x = contract_conj(&a12, &w2, &b42); // [1, 4]
    let y = contract_conj(&b43, &w3, &a13); // [4, 1]
    let mut cross = Complex64::default();
    for (i1, u) in w1.iter().enumerate() {
        for (i4, v) in w4.iter().enumerate() {
            cross += u * v * x.get(i1, i4) * y.get(i4, i1);
        }
    }
    Ok((direct - 2.0 * cross.re).max(0.0))
}
