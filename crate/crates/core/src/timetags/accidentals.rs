use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-window probabilities. Index k of `eta` and `p_noise` is channel k+1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccidentalParams {
    pub mu_c1: f64,
    pub mu_c2: f64,
    pub eta: [f64; 4],
    pub p_noise: [f64; 4],
    pub gamma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccidentalTerms {
    pub a0: f64,
    pub as2: f64,
    pub as3: f64,
    pub p_real: f64,
}

impl AccidentalParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        let all = [self.mu_c1, self.mu_c2, self.gamma].into_iter().chain(self.eta).chain(self.p_noise);
        if all.clone().all(unit) {
            Ok(())
        } else {
            Err(Error::invalid("accidental parameters must lie in [0, 1]"))
        }
    }
}

/// Probability that at least one of two photons is detected.
fn eta_bar(eta: f64) -> f64 {
    1.0 - (1.0 - eta).powi(2)
}

/// Leading-order fourfold probability per window and the two shifted-tag
/// accidental estimates.
pub fn analytic_accidentals(p: &AccidentalParams) -> Result<AccidentalTerms> {
    p.validate()?;
    let [e1, e2, e3, e4] = p.eta;
    let [p1, p2, p3, p4] = p.p_noise;
    let (m1, m2, g) = (p.mu_c1, p.mu_c2, p.gamma);
    let (eb2, eb3) = (eta_bar(e2), eta_bar(e3));

    let a0 = (1.0 - g) * m2 * e4 * e3 * m1 * e1 * e2
        + g / 2.0 * m2 * e4 * m1 * e1 * eb2 * p3
        + g / 2.0 * m2 * e4 * m1 * e1 * eb3 * p2
        + 0.5 * m2 * e4 * e3 * p1 * p2
        + 0.5 * m2 * e4 * e2 * p1 * p3
        + p4 * p3 * 0.5 * m1 * e1 * e2
        + p4 * p2 * 0.5 * m1 * e1 * e3;
    let as2 = 0.5 * m2 * e4 * e3 * p1 * p2 + p4 * p2 * 0.5 * m1 * e1 * e3 + g / 2.0 * m2 * e4 * m1 * e1 * eb3 * p2;
    let as3 = p4 * p3 * 0.5 * m1 * e1 * e2 + 0.5 * m2 * e4 * e2 * p1 * p3 + g / 2.0 * m2 * e4 * m1 * e1 * eb2 * p3;
    Ok(AccidentalTerms { a0, as2, as3, p_real: a0 - as2 - as3 })
}
