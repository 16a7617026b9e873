use std::io::Write;

use serde::Serialize;

use super::{FourfoldEngine, InterferenceSetup};
use crate::units::to_ps;
use crate::{Error, Result};

/// Where the distinguishable-photon plateau is read and whether it can be.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlateauRule {
    /// [s]
    pub delay: f64,
    pub reliable: bool,
    pub reason: Option<String>,
}

/// The plateau sits at `max(3 T_c, 3 j)`: far enough out that the exchange
/// terms have died, yet inside the BS window so photon 3' is still captured.
/// It is unreliable when `tau_23 < 4 T_c` or when the plateau delay plus one
/// coherence time reaches past `tau_23 / 2`; there the curve decays with `tau`
/// instead of levelling off.
pub fn plateau_rule(setup: &InterferenceSetup) -> PlateauRule {
    let tc = setup.max_coherence_time();
    let j = setup.detectors.max_jitter();
    let t23 = setup.windows.tau_23;
    let delay = (3.0 * tc).max(3.0 * j);
    let reason = if t23 < 4.0 * tc {
        Some(format!("tau_23 = {:.1} ps is below 4 T_c = {:.1} ps", to_ps(t23), to_ps(4.0 * tc)))
    } else if delay + tc > 0.5 * t23 {
        Some(format!(
            "plateau delay {:.1} ps plus T_c reaches beyond tau_23/2 = {:.1} ps",
            to_ps(delay),
            to_ps(0.5 * t23)
        ))
    } else {
        None
    };
    PlateauRule { delay, reliable: reason.is_none(), reason }
}

/// Four-photon probability versus delay with dip and plateau.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomCurve {
    /// [s]
    pub delays: Vec<f64>,
    pub values: Vec<f64>,
    pub dip: f64,
    pub plateau: f64,
    pub plateau_rule: PlateauRule,
}

impl HomCurve {
    /// `tau_ps,value`, values divided by `norm`.
    pub fn write_csv(&self, out: impl Write, norm: f64) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tau_ps", "value"])?;
        for (t, v) in self.delays.iter().zip(&self.values) {
            w.write_record([to_ps(*t).to_string(), (v / norm).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluates the four-photon probability at every delay (in parallel).
pub fn hom_curve(setup: &InterferenceSetup, delays: &[f64]) -> Result<HomCurve> {
    let rule = plateau_rule(setup);
    let max_tau = delays.iter().fold(rule.delay, |m, t| m.max(t.abs()));
    setup.check_resolution(max_tau)?;
    let engine = FourfoldEngine::new(setup)?;
    let values = engine.probabilities(delays)?;
    let dip = engine.probability(0.0)?;
    let plateau = engine.probability(rule.delay)?;
    Ok(HomCurve { delays: delays.to_vec(), values, dip, plateau, plateau_rule: rule })
}

/// `(P(inf) - P(0)) / P(inf)`.
pub fn visibility(curve: &HomCurve) -> Result<f64> {
    if !curve.plateau_rule.reliable {
        return Err(Error::UnreliablePlateau(curve.plateau_rule.reason.clone().unwrap_or_default()));
    }
    if !(curve.plateau > 0.0) {
        return Err(Error::ZeroPlateau);
    }
    Ok((curve.plateau - curve.dip) / curve.plateau)
}

/// Visibility from the dip and plateau alone, without a delay scan.
pub fn visibility_of(setup: &InterferenceSetup) -> Result<f64> {
    let rule = plateau_rule(setup);
    if !rule.reliable {
        return Err(Error::UnreliablePlateau(rule.reason.unwrap_or_default()));
    }
    setup.check_resolution(rule.delay)?;
    let engine = FourfoldEngine::new(setup)?;
    let curve = HomCurve {
        delays: vec![],
        values: vec![],
        dip: engine.probability(0.0)?,
        plateau: engine.probability(rule.delay)?,
        plateau_rule: rule,
    };
    visibility(&curve)
}
