//! Four-photon rates: CW and pulsed formulas, the window optimizer under a
//! visibility constraint, and swap counts over a lossy pass.

use std::io::Read;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detection::DetectorModel;
use crate::interference::{identical_source_setup, map_tau_23, visibility_of, CoincidenceConfig, SourceShape};
use crate::units::{db_to_transmission, PICOSECOND};
use crate::{Error, Result};

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {x}")))
    }
}

/// `(mu / T_c)^2 * tau_w`, optionally times `eta1..eta4` and the 1/2 of a
/// linear-optics Bell measurement.
pub fn cw_fourfold_rate(mu: f64, tc: f64, tau_w: f64, etas: Option<[f64; 4]>, with_bsm_factor: bool) -> Result<f64> {
    positive("mu", mu)?;
    positive("coherence time", tc)?;
    positive("window", tau_w)?;
    if tau_w > tc {
        log::warn!("window {tau_w:e} s exceeds the coherence time {tc:e} s");
    }
    let mut r = (mu / tc).powi(2) * tau_w;
    if let Some(e) = etas {
        if !e.iter().all(|x| (0.0..=1.0).contains(x)) {
            return Err(Error::invalid("efficiencies must lie in [0, 1]"));
        }
        r *= e.iter().product::<f64>();
    }
    if with_bsm_factor {
        r *= 0.5;
    }
    Ok(r)
}

/// `(mu_p * tau_p / T_c)^2 * f_rep`.
pub fn pulsed_rate(mu_p: f64, tau_p: f64, tc: f64, f_rep: f64) -> Result<f64> {
    positive("mu", mu_p)?;
    positive("pulse duration", tau_p)?;
    positive("coherence time", tc)?;
    positive("repetition rate", f_rep)?;
    Ok((mu_p * tau_p / tc).powi(2) * f_rep)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossSample {
    /// [s]
    pub t: f64,
    /// Channels 1..4 [dB]; infinite means no light.
    pub loss_db: [f64; 4],
}

/// Channel losses versus time over one pass.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LossProfile {
    samples: Vec<LossSample>,
}

#[derive(Deserialize)]
struct LossRow {
    t_s: f64,
    loss1_db: f64,
    loss2_db: f64,
    loss3_db: f64,
    loss4_db: f64,
}

impl LossProfile {
    pub fn new(samples: Vec<LossSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("loss profile is empty"));
        }
        for (i, s) in samples.iter().enumerate() {
            if !s.t.is_finite() || (i > 0 && s.t <= samples[i - 1].t) {
                return Err(Error::invalid(format!("loss profile time {i} is not strictly increasing")));
            }
            if !s.loss_db.iter().all(|l| *l >= 0.0) {
                return Err(Error::invalid(format!("loss profile row {i} has a negative or NaN loss")));
            }
        }
        Ok(LossProfile { samples })
    }

    /// Constant losses from `t = 0` to `duration`.
    pub fn constant(duration: f64, loss_db: [f64; 4]) -> Result<Self> {
        positive("duration", duration)?;
        LossProfile::new(vec![LossSample { t: 0.0, loss_db }, LossSample { t: duration, loss_db }])
    }

    /// CSV with header `t_s,loss1_db,loss2_db,loss3_db,loss4_db`.
    pub fn read_csv(input: impl Read) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let expected = ["t_s", "loss1_db", "loss2_db", "loss3_db", "loss4_db"];
        if r.headers()?.iter().ne(expected) {
            return Err(Error::invalid(format!("loss profile header must be {}", expected.join(","))));
        }
        let mut samples = Vec::new();
        for row in r.deserialize() {
            let row: LossRow = row?;
            samples.push(LossSample { t: row.t_s, loss_db: [row.loss1_db, row.loss2_db, row.loss3_db, row.loss4_db] });
        }
        LossProfile::new(samples)
    }

    pub fn samples(&self) -> &[LossSample] {
        &self.samples
    }

    pub fn duration(&self) -> f64 {
        self.samples[self.samples.len() - 1].t - self.samples[0].t
    }
}

/// Expected swaps over the pass: trapezoid integral of the CW rate with
/// time-dependent efficiencies and the Bell-measurement factor.
pub fn pass_swaps(profile: &LossProfile, mu: f64, tc: f64, tau_w: f64) -> Result<f64> {
    let rates = profile
        .samples
        .iter()
        .map(|s| cw_fourfold_rate(mu, tc, tau_w, Some(s.loss_db.map(db_to_transmission)), true))
        .collect::<Result<Vec<f64>>>()?;
    Ok(profile.samples.windows(2).zip(rates.windows(2)).map(|(s, r)| 0.5 * (s[1].t - s[0].t) * (r[0] + r[1])).sum())
}

fn default_samples() -> usize {
    40
}

/// Window optimization problem. Times in s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateQuery {
    /// Mean pairs per coherence time.
    pub mu: f64,
    /// Jitter FWHM on every channel.
    pub jitter: f64,
    pub v_target: f64,
    pub tc_max: f64,
    pub tau_w_range: (f64, f64),
    pub filter_kind: SourceShape,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
}

impl RateQuery {
    /// 40 log-spaced windows over 5 ps .. 1 ns, rectangular filters.
    pub fn new(mu: f64, jitter: f64, v_target: f64, tc_max: f64) -> Self {
        RateQuery {
            mu,
            jitter,
            v_target,
            tc_max,
            tau_w_range: (5.0 * PICOSECOND, 1000.0 * PICOSECOND),
            filter_kind: SourceShape::Rect,
            n_samples: default_samples(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu <= 0.2) {
            return Err(Error::invalid("mu must lie in (0, 0.2]"));
        }
        if !(self.jitter.is_finite() && self.jitter >= 0.0) {
            return Err(Error::invalid("jitter must be >= 0"));
        }
        if !(self.v_target > 0.0 && self.v_target < 1.0) {
            return Err(Error::invalid("target visibility must lie in (0, 1)"));
        }
        positive("coherence-time cap", self.tc_max)?;
        let (lo, hi) = self.tau_w_range;
        positive("window range start", lo)?;
        if !(hi.is_finite() && hi >= lo) {
            return Err(Error::invalid("window range must be increasing"));
        }
        if self.n_samples == 0 || (self.n_samples == 1 && hi > lo) {
            return Err(Error::invalid("need at least two window samples for a range"));
        }
        Ok(())
    }

    fn windows(&self) -> Vec<f64> {
        let (lo, hi) = self.tau_w_range;
        let n = self.n_samples;
        if n == 1 {
            return vec![lo];
        }
        (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect()
    }

    /// Visibility of identical sources with coherence time `tc`, heralding
    /// window `tau_w` and a BS window long enough for a reliable plateau.
    pub fn visibility(&self, tc: f64, tau_w: f64) -> Result<f64> {
        let detectors = DetectorModel::uniform(self.jitter)?;
        let windows = CoincidenceConfig::new(tau_w, map_tau_23(tc, self.jitter))?;
        visibility_of(&identical_source_setup(self.filter_kind, tc, detectors, windows, 0.0)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSample {
    /// [s]
    pub tau_w: f64,
    /// Smallest coherence time meeting the target, `None` if the cap is not
    /// enough [s].
    pub tc: Option<f64>,
    /// Zero when infeasible [1/s].
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub tau_w_opt: f64,
    pub tc_opt: f64,
    pub rate_opt: f64,
    pub curve: Vec<RateSample>,
}

/// Stop once the bracket is this tight.
const BISECTION_RATIO: f64 = 1.05;

/// Smallest coherence time with `V >= v_target` at window `tau_w`, to 5%.
fn min_coherence_time(q: &RateQuery, tau_w: f64) -> Result<Option<f64>> {
    let ok = |tc: f64| -> Result<bool> { Ok(q.visibility(tc, tau_w)? >= q.v_target) };
    if !ok(q.tc_max)? {
        return Ok(None);
    }
    let floor = 0.25 * tau_w;
    let mut hi = q.tc_max;
    let mut lo = 0.5 * hi;
    while ok(lo)? {
        hi = lo;
        if lo <= floor {
            return Ok(Some(hi));
        }
        lo = (0.5 * lo).max(floor);
    }
    while hi / lo > BISECTION_RATIO {
        let mid = (lo * hi).sqrt();
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// For each window, the smallest coherence time that keeps the visibility at
/// the target, and the resulting rate `(mu / T_c)^2 * tau_w`.
pub fn optimize_window(q: &RateQuery) -> Result<OptResult> {
    q.validate()?;
    let curve = q
        .windows()
        .into_par_iter()
        .map(|tau_w| {
            let tc = min_coherence_time(q, tau_w)?;
            let rate = match tc {
                Some(tc) => cw_fourfold_rate(q.mu, tc, tau_w, None, false)?,
                None => 0.0,
            };
            Ok(RateSample { tau_w, tc, rate })
        })
        .collect::<Result<Vec<_>>>()?;
    if curve[0].tc.is_none() {
        return Err(Error::Infeasible(format!(
            "visibility {} needs T_c above the cap {:.1} ps at the shortest window",
            q.v_target,
            q.tc_max / PICOSECOND
        )));
    }
    let best = curve.iter().fold(curve[0], |b, s| if s.rate > b.rate { *s } else { b });
    Ok(OptResult { tau_w_opt: best.tau_w, tc_opt: best.tc.expect("feasible"), rate_opt: best.rate, curve })
}
