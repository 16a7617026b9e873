use num_complex::Complex64;
use rayon::prelude::*;

use super::InterferenceSetup;
use crate::detection::jitter_kernel;
use crate::linalg::{CMat, Mat};
use crate::units::sinc;
use crate::{Error, Result};

/// Relative imaginary residue tolerated before a sum is declared non-real.
const IMAG_TOLERANCE: f64 = 1e-9;

/// One evaluation of the four-photon probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourfoldValue {
    /// Real, nonnegative probability (global scale arbitrary).
    pub value: f64,
    /// |Im| of the discrete sum relative to the magnitude of its terms.
    pub imag_residue: f64,
    /// Factorized (non-interfering) part alone.
    pub direct: f64,
}

/// Precomputed discrete four-photon sum for one setup.
///
/// With `v_m(tau) = J_B(Omega_m) exp(-i tau Omega_m)` the probability is the
/// quadratic form `v^T (Q_direct - Q_cross) v^*`. The two factorized bracket
/// terms collapse to products of double sums and the two exchange terms to
/// traces `tr(Phi_3 M_1 Phi_2 M_4)`, `tr(Phi_2 M_1 Phi_3 M_4)` whose
/// `tau`-independent parts are contracted once here.
pub struct FourfoldEngine {
    setup: InterferenceSetup,
    omegas: Vec<f64>,
    q_direct: CMat,
    q_cross: CMat,
    scale: f64,
}

impl FourfoldEngine {
    pub fn new(setup: &InterferenceSetup) -> Result<Self> {
        setup.check_resolution(0.0)?;
        let grid = *setup.grid();
        let n = grid.n_points();
        let dw = grid.spacing();
        let jit = setup.detectors.jitter_fwhm;
        let (t14, t23) = (setup.windows.tau_14, setup.windows.tau_23);

        // all kernels are even functions of Omega_n - Omega_m, tabulated by |n - m|
        let table = |f: &dyn Fn(f64) -> f64| -> Vec<f64> { (0..n).map(|k| f(k as f64 * dw)).collect() };
        let g1 = table(&|d| jitter_kernel(jit[0], d));
        let phi2 = table(&|d| t23 * sinc(0.5 * t23 * d) * jitter_kernel(jit[1], d));
        let phi3 = table(&|d| t23 * sinc(0.5 * t23 * d) * jitter_kernel(jit[2], d));
        let k4 = table(&|d| t14 * sinc(0.5 * t14 * d) * jitter_kernel(jit[3], d));
        let toeplitz = |t: &[f64]| Mat::from_fn(n, n, |m, k| t[m.abs_diff(k)]);

        let a = setup.jsa_a.values();
        let m1 = CMat::from_fn(n, n, |m, k| a[m] * g1[m.abs_diff(k)] * a[k].conj());
        let (mut s2, mut s3) = (Complex64::default(), Complex64::default());
        for m in 0..n {
            for k in 0..n {
                let z = m1.get(m, k);
                s2 += z * phi2[m.abs_diff(k)];
                s3 += z * phi3[m.abs_diff(k)];
            }
        }
        let (p2, p3) = (toeplitz(&phi2), toeplitz(&phi3));
        let c3 = m1.sandwich(&p3, &p2);
        let c4 = m1.sandwich(&p2, &p3);

        let q_direct = CMat::from_fn(n, n, |m, k| {
            let d = m.abs_diff(k);
            k4[d] * (s2 * phi3[d] + s3 * phi2[d])
        });
        let q_cross = CMat::from_fn(n, n, |m, k| k4[m.abs_diff(k)] * (c3.get(k, m) + c4.get(k, m)));

        Ok(FourfoldEngine { setup: setup.clone(), omegas: grid.values(), q_direct, q_cross, scale: dw.powi(4) })
    }

    pub fn setup(&self) -> &InterferenceSetup {
        &self.setup
    }

    fn quadratic(q: &CMat, v: &[Complex64]) -> Complex64 {
        let n = v.len();
        let mut total = Complex64::default();
        for m in 0..n {
            let (re, im) = (&q.re.data[m * n..(m + 1) * n], &q.im.data[m * n..(m + 1) * n]);
            let mut row = Complex64::default();
            for k in 0..n {
                row += Complex64::new(re[k], im[k]) * v[k].conj();
            }
            total += v[m] * row;
        }
        total
    }

    /// Full evaluation at delay `tau` [s].
    pub fn evaluate(&self, tau: f64) -> Result<FourfoldValue> {
        if !tau.is_finite() {
            return Err(Error::NonFinite("delay"));
        }
        self.setup.check_resolution(tau)?;
        let b = self.setup.jsa_b.values();
        let v: Vec<Complex64> =
            b.iter().zip(&self.omegas).map(|(bm, w)| bm * Complex64::from_polar(1.0, -tau * w)).collect();
        let direct = Self::quadratic(&self.q_direct, &v) * self.scale;
        let cross = Self::quadratic(&self.q_cross, &v) * self.scale;
        let total = direct - cross;
        let magnitude = direct.norm() + cross.norm();
        if magnitude == 0.0 {
            return Ok(FourfoldValue { value: 0.0, imag_residue: 0.0, direct: 0.0 });
        }
        let imag_residue = total.im.abs() / magnitude;
        if imag_residue > IMAG_TOLERANCE {
            return Err(Error::Unphysical(format!("relative imaginary residue {imag_residue:.3e}")));
        }
        if total.re < -IMAG_TOLERANCE * magnitude {
            return Err(Error::Unphysical(format!("negative probability {:.3e}", total.re)));
        }
        Ok(FourfoldValue { value: total.re.max(0.0), imag_residue, direct: direct.re })
    }

    pub fn probability(&self, tau: f64) -> Result<f64> {
        Ok(self.evaluate(tau)?.value)
    }

    /// Probabilities at many delays, evaluated in parallel.
    pub fn probabilities(&self, delays: &[f64]) -> Result<Vec<f64>> {
        delays.par_iter().map(|&t| self.probability(t)).collect()
    }
}

/// Four-photon coincidence probability at delay `tau` (unnormalized).
pub fn fourfold_probability(setup: &InterferenceSetup, tau: f64) -> Result<f64> {
    FourfoldEngine::new(setup)?.probability(tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::DetectorModel;
    use crate::interference::CoincidenceConfig;
    use crate::spectral::{FrequencyGrid, JointSpectralAmplitude};
    use crate::units::ps;

    /// Literal four-index sum of the discrete bracket, for tiny grids only.
    fn literal(setup: &InterferenceSetup, tau: f64) -> Complex64 {
        let g = setup.grid();
        let n = g.n_points();
        let w = g.values();
        let (a, b) = (setup.jsa_a.values(), setup.jsa_b.values());
        let j = setup.detectors.jitter_fwhm;
        let (t14, t23) = (setup.windows.tau_14, setup.windows.tau_23);
        let phi = |c: usize, x: f64, y: f64| t23 * sinc(0.5 * t23 * (y - x)) * jitter_kernel(j[c], y - x);
        let mut acc = Complex64::default();
        for i1 in 0..n {
            for i2 in 0..n {
                for i3 in 0..n {
                    for i4 in 0..n {
                        let (o1, o2, o3, o4) = (w[i1], w[i2], w[i3], w[i4]);
                        let pre = t14
                            * sinc(0.5 * t14 * (o4 - o3))
                            * jitter_kernel(j[0], o2 - o1)
                            * jitter_kernel(j[3], o4 - o3);
                        let amp =
                            a[i1] * a[i2].conj() * b[i3] * b[i4].conj() * Complex64::from_polar(1.0, tau * (o4 - o3));
                        let bracket = phi(1, o1, o2) * phi(2, o3, o4) + phi(1, o3, o4) * phi(2, o1, o2)
                            - phi(1, o3, o2) * phi(2, o1, o4)
                            - phi(1, o1, o4) * phi(2, o3, o2);
                        acc += amp * pre * bracket;
                    }
                }
            }
        }
        acc * g.spacing().powi(4)
    }

    fn small_setup(complex_phase: bool) -> InterferenceSetup {
        let grid = FrequencyGrid::new(17, 4e10).unwrap();
        let a: Vec<Complex64> = (0..17)
            .map(|m| {
                let x = (m as f64 - 8.0) / 4.0;
                Complex64::from_polar((-x * x).exp(), if complex_phase { 0.3 * x * x * x } else { 0.0 })
            })
            .collect();
        let b: Vec<Complex64> = (0..17)
            .map(|m| {
                let x = (m as f64 - 7.5) / 3.0;
                Complex64::from_polar((-x * x).exp(), if complex_phase { -0.5 * x } else { 0.0 })
            })
            .collect();
        InterferenceSetup::new(
            JointSpectralAmplitude::from_values(grid, a).unwrap(),
            JointSpectralAmplitude::from_values(grid, b).unwrap(),
            DetectorModel::new([ps(17.0), ps(13.0), ps(11.0), ps(16.0)]).unwrap(),
            CoincidenceConfig::new(ps(40.0), ps(60.0)).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn regrouped_sum_equals_literal_sum() {
        for phase in [false, true] {
            let s = small_setup(phase);
            let e = FourfoldEngine::new(&s).unwrap();
            for tau in [0.0, ps(7.0), ps(-12.0)] {
                let lit = literal(&s, tau);
                let v = e.evaluate(tau).unwrap();
                assert!((v.value - lit.re).abs() <= 1e-10 * lit.re.abs(), "{} vs {}", v.value, lit.re);
                assert!(lit.im.abs() <= 1e-9 * lit.re.abs());
            }
        }
    }

    #[test]
    fn refuses_coarse_grid() {
        let s = small_setup(false);
        let e = FourfoldEngine::new(&s).unwrap();
        match e.evaluate(ps(5000.0)) {
            Err(Error::Resolution { required_points, .. }) => assert!(required_points > 17),
            other => panic!("expected refusal, got {other:?}"),
        }
    }
}
