use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::spectral::JointSpectralAmplitude;
use crate::units::{fwhm_per_sigma, to_ps};
use crate::{Error, Result};

/// Sampled temporal coherence function and its FWHM.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceCurve {
    /// [s]
    pub delays: Vec<f64>,
    pub density: Vec<f64>,
    /// [s]
    pub t_c_fwhm: f64,
}

impl CoherenceCurve {
    /// `tau_ps,value`
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tau_ps", "value"])?;
        for (t, g) in self.delays.iter().zip(&self.density) {
            w.write_record([to_ps(*t).to_string(), g.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `C(d) = sum_n J_{n+d} J_n^*` for `d >= 0` with the jitter kernel folded in.
struct Autocorrelation {
    weighted: Vec<Complex64>,
    spacing: f64,
}

impl Autocorrelation {
    fn new(jsa: &JointSpectralAmplitude, jit_s: f64, jit_i: f64) -> Result<Self> {
        for j in [jit_s, jit_i] {
            if !(j.is_finite() && j >= 0.0) {
                return Err(Error::invalid("jitter FWHM must be >= 0"));
            }
        }
        let values = jsa.values();
        let n = values.len();
        let size = (2 * n).next_power_of_two();
        let mut buf: Vec<Complex64> = values.to_vec();
        buf.resize(size, Complex64::default());
        let mut planner = FftPlanner::new();
        let fwd: Arc<dyn rustfft::Fft<f64>> = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        fwd.process(&mut buf);
        for z in buf.iter_mut() {
            *z = Complex64::new(z.norm_sqr(), 0.0);
        }
        inv.process(&mut buf);

        let spacing = jsa.grid().spacing();
        let var = (jit_s / fwhm_per_sigma()).powi(2) + (jit_i / fwhm_per_sigma()).powi(2);
        let scale = spacing * spacing / size as f64;
        let weighted = (0..n)
            .map(|d| {
                let dw = d as f64 * spacing;
                buf[d] * scale * (-0.5 * var * dw * dw).exp()
            })
            .collect();
        Ok(Autocorrelation { weighted, spacing })
    }

    /// `G(tau) = sum_d C(d) K(d dOmega) exp(i d dOmega tau)`, using `C(-d) = C(d)^*`.
    fn eval(&self, tau: f64) -> f64 {
        let step = Complex64::from_polar(1.0, self.spacing * tau);
        let mut phase = step;
        let mut acc = 0.0;
        for (d, c) in self.weighted.iter().enumerate().skip(1) {
            if d % 64 == 0 {
                phase = Complex64::from_polar(1.0, d as f64 * self.spacing * tau);
            }
            acc += (c * phase).re;
            phase *= step;
        }
        (self.weighted[0].re + 2.0 * acc).max(0.0)
    }

    fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.spacing
    }
}

/// Linear-interpolated FWHM, first crossing from the peak outward on each side.
fn fwhm_linear(delays: &[f64], values: &[f64]) -> Result<f64> {
    let (peak_i, peak) =
        values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    if !(peak > 0.0) {
        return Err(Error::invalid("coherence function vanishes"));
    }
    let half = 0.5 * peak;
    let cross = |i_in: usize, i_out: usize| -> f64 {
        let (t0, t1, v0, v1) = (delays[i_in], delays[i_out], values[i_in], values[i_out]);
        t0 + (v0 - half) / (v0 - v1) * (t1 - t0)
    };
    let right =
        (peak_i + 1..values.len()).find(|&i| values[i] < half).ok_or(Error::FwhmNotBracketed("positive delays"))?;
    let left = (0..peak_i).rev().find(|&i| values[i] < half).ok_or(Error::FwhmNotBracketed("negative delays"))?;
    Ok(cross(right - 1, right) - cross(left + 1, left))
}

/// Coherence function `G(tau)` of one source with signal/idler jitter, at
/// the given delays (ascending, symmetric about zero).
pub fn coherence_function(
    jsa: &JointSpectralAmplitude,
    jit_s: f64,
    jit_i: f64,
    delays: &[f64],
) -> Result<CoherenceCurve> {
    if delays.len() < 3 {
        return Err(Error::invalid("need at least three delays"));
    }
    if delays.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("delays"));
    }
    if delays.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("delays must be strictly ascending"));
    }
    let ac = Autocorrelation::new(jsa, jit_s, jit_i)?;
    let density: Vec<f64> = delays.par_iter().map(|&t| ac.eval(t)).collect();
    let t_c_fwhm = fwhm_linear(delays, &density)?;
    Ok(CoherenceCurve { delays: delays.to_vec(), density, t_c_fwhm })
}

/// FWHM of `G` found without a user delay grid: coarse scan over one period
/// of the discrete spectrum, then bisection on the continuous `G(tau)`.
pub fn coherence_time(jsa: &JointSpectralAmplitude, jit_s: f64, jit_i: f64) -> Result<f64> {
    let ac = Autocorrelation::new(jsa, jit_s, jit_i)?;
    let n = jsa.grid().n_points();
    let period = ac.period();
    let samples = 8 * n + 1;
    let dt = period / (samples - 1) as f64;
    let delays: Vec<f64> = (0..samples).map(|k| -0.5 * period + k as f64 * dt).collect();
    let values: Vec<f64> = delays.par_iter().map(|&t| ac.eval(t)).collect();

    let peak_i = (0..samples).max_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    // golden-section refinement of the peak within one sample
    let (mut a, mut b) = (delays[peak_i] - dt, delays[peak_i] + dt);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let (c, d) = (b - g * (b - a), a + g * (b - a));
        if ac.eval(c) > ac.eval(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let t_peak = 0.5 * (a + b);
    let peak = ac.eval(t_peak).max(values[peak_i]);
    if !(peak > 0.0) {
        return Err(Error::invalid("coherence function vanishes"));
    }
    let half = 0.5 * peak;

    let edge = |dir: isize| -> Result<f64> {
        let mut i = peak_i as isize;
        loop {
            let next = i + dir;
            if next < 0 || next >= samples as isize {
                return Err(Error::FwhmNotBracketed("one period of the frequency grid"));
            }
            if values[next as usize] < half {
                let (mut inside, mut outside) = (delays[i as usize], delays[next as usize]);
                if dir > 0 {
                    inside = inside.max(t_peak);
                } else {
                    inside = inside.min(t_peak);
                }
                for _ in 0..60 {
                    let mid = 0.5 * (inside + outside);
                    if ac.eval(mid) >= half {
                        inside = mid;
                    } else {
                        outside = mid;
                    }
                }
                return Ok(0.5 * (inside + outside));
            }
            i = next;
        }
    };
    Ok(edge(1)? - edge(-1)?)
}
