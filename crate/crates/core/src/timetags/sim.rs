use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::{seconds_to_fs, AccidentalParams, Tag, TagStream};
use crate::detection::DetectorModel;
use crate::interference::{CoherenceCurve, CoincidenceConfig};
use crate::{Error, Result};

/// Monte Carlo scenario. Rates in 1/s, times in s; arrays index channels 1..4.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimScenario {
    pub pair_rate_a: f64,
    pub pair_rate_b: f64,
    /// Density of the partner delay relative to the herald.
    pub internal_delay: CoherenceCurve,
    /// Probability that two beam-splitter photons leave through one port.
    pub gamma: f64,
    /// A and B photons closer than half this window meet at the beam
    /// splitter and are routed jointly.
    pub gamma_window: f64,
    /// Uncorrelated detected counts per channel.
    pub noise_rates: [f64; 4],
    pub etas: [f64; 4],
    pub detectors: DetectorModel,
    pub duration: f64,
    pub rng_seed: u64,
}

impl SimScenario {
    pub fn validate(&self) -> Result<()> {
        let rate_ok = |r: f64| r.is_finite() && r >= 0.0;
        if !rate_ok(self.pair_rate_a) || !rate_ok(self.pair_rate_b) || !self.noise_rates.iter().all(|r| rate_ok(*r)) {
            return Err(Error::invalid("rates must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&self.gamma) || !self.etas.iter().all(|e| (0.0..=1.0).contains(e)) {
            return Err(Error::invalid("gamma and efficiencies must lie in [0, 1]"));
        }
        if !(self.gamma_window.is_finite() && self.gamma_window >= 0.0) {
            return Err(Error::invalid("gamma window must be >= 0"));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::invalid("duration must be positive"));
        }
        DetectorModel::new(self.detectors.jitter_fwhm)?;
        Ok(())
    }

    /// Per-window probabilities for the closed-form accidentals, with
    /// `windows() = duration / tau_14` trigger windows.
    ///
    /// A B pair takes part in a fourfold only if both of its photons fall
    /// inside their windows, so its probability uses the narrower window.
    /// B heralds whose partner misses the beam-splitter window act as
    /// channel-4 noise. Beam-splitter noise also counts photons of
    /// unrelated pairs, which are indistinguishable from noise there.
    pub fn accidental_params(&self, cfg: &CoincidenceConfig, gamma: f64) -> AccidentalParams {
        let (w14, w23) = (cfg.tau_14, cfg.tau_23);
        let w = w14.min(w23);
        let stray = 0.5 * (self.pair_rate_a + self.pair_rate_b);
        let n = self.noise_rates;
        // chance of at least one tag; triggers count individually
        let hit = |rate: f64, window: f64| -(-rate * window).exp_m1();
        AccidentalParams {
            mu_c1: self.pair_rate_a * w14,
            mu_c2: self.pair_rate_b * w,
            eta: self.etas,
            p_noise: [
                n[0] * w14,
                hit(n[1] + stray * self.etas[1], w23),
                hit(n[2] + stray * self.etas[2], w23),
                hit(n[3] + self.pair_rate_b * self.etas[3] * (1.0 - w / w14), w14),
            ],
            gamma,
        }
    }

    pub fn windows(&self, cfg: &CoincidenceConfig) -> f64 {
        self.duration / cfg.tau_14
    }
}

/// Inverse-CDF sampler over a tabulated delay density.
#[derive(Clone, Debug)]
pub struct DelaySampler {
    delays: Vec<f64>,
    density: Vec<f64>,
    cdf: Vec<f64>,
}

impl DelaySampler {
    pub fn new(curve: &CoherenceCurve) -> Result<Self> {
        let (t, g) = (&curve.delays, &curve.density);
        if t.len() < 2 || t.len() != g.len() {
            return Err(Error::invalid("delay density needs at least two samples"));
        }
        if g.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("delay density must be >= 0 on ascending delays"));
        }
        let mut cdf = vec![0.0];
        for k in 1..t.len() {
            cdf.push(cdf[k - 1] + 0.5 * (g[k] + g[k - 1]) * (t[k] - t[k - 1]));
        }
        if !(cdf[cdf.len() - 1] > 0.0) {
            return Err(Error::invalid("delay density integrates to zero"));
        }
        Ok(DelaySampler { delays: t.clone(), density: g.clone(), cdf })
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let x = rng.random::<f64>() * self.cdf[self.cdf.len() - 1];
        let k = self.cdf.partition_point(|c| *c <= x).clamp(1, self.cdf.len() - 1);
        let (t0, t1) = (self.delays[k - 1], self.delays[k]);
        let (g0, g1) = (self.density[k - 1], self.density[k]);
        // density is linear inside the segment: solve the quadratic CDF
        let r = (x - self.cdf[k - 1]) / (t1 - t0);
        let root = (g0 * g0 + 2.0 * (g1 - g0) * r).max(0.0).sqrt();
        let f = if g0 + root > 0.0 { 2.0 * r / (g0 + root) } else { 0.5 };
        t0 + f.clamp(0.0, 1.0) * (t1 - t0)
    }
}

fn poisson(rng: &mut impl Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        0
    } else {
        Poisson::new(mean).expect("positive mean").sample(rng) as u64
    }
}

/// Generates a sorted tag stream; identical seeds give identical streams.
///
/// Pairs are emitted as Poisson processes. Each pair puts its herald in
/// channel 1 (source A) or 4 (source B) and its partner on the beam
/// splitter after a delay drawn from `internal_delay`. An A and a B photon
/// within `gamma_window / 2` of each other are matched greedily and leave
/// together through one port with probability `gamma`, else through
/// different ports; unmatched photons pick a port at random. Then come
/// per-channel Bernoulli losses, Poisson noise and Gaussian jitter. Times
/// wrap around the stream duration.
pub fn simulate_streams(sc: &SimScenario) -> Result<TagStream> {
    sc.validate()?;
    let sampler = DelaySampler::new(&sc.internal_delay)?;
    let mut rng = ChaCha8Rng::seed_from_u64(sc.rng_seed);
    let d = sc.duration;

    // (time, channel) before loss, noise and jitter
    let mut raw: Vec<(f64, u8)> = Vec::new();
    let mut partners: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for (src, rate) in [sc.pair_rate_a, sc.pair_rate_b].into_iter().enumerate() {
        let herald_channel = if src == 0 { 1 } else { 4 };
        let n = poisson(&mut rng, rate * d);
        for _ in 0..n {
            let t = rng.random::<f64>() * d;
            raw.push((t, herald_channel));
            partners[src].push(t + sampler.sample(&mut rng));
        }
        partners[src].sort_by(f64::total_cmp);
    }

    let [pa, pb] = &partners;
    let (mut i, mut j) = (0, 0);
    let half = 0.5 * sc.gamma_window;
    let route_single = |t: f64, rng: &mut ChaCha8Rng, raw: &mut Vec<(f64, u8)>| {
        raw.push((t, if rng.random::<bool>() { 2 } else { 3 }));
    };
    while i < pa.len() || j < pb.len() {
        if i < pa.len() && j < pb.len() && (pa[i] - pb[j]).abs() <= half {
            let (ta, tb) = (pa[i], pb[j]);
            if rng.random::<f64>() < sc.gamma {
                let port = if rng.random::<bool>() { 2 } else { 3 };
                raw.push((ta, port));
                raw.push((tb, port));
            } else if rng.random::<bool>() {
                raw.push((ta, 2));
                raw.push((tb, 3));
            } else {
                raw.push((ta, 3));
                raw.push((tb, 2));
            }
            i += 1;
            j += 1;
        } else if j >= pb.len() || (i < pa.len() && pa[i] < pb[j]) {
            route_single(pa[i], &mut rng, &mut raw);
            i += 1;
        } else {
            route_single(pb[j], &mut rng, &mut raw);
            j += 1;
        }
    }

    raw.retain(|&(_, ch)| rng.random::<f64>() < sc.etas[ch as usize - 1]);
    for ch in 1..=4u8 {
        let n = poisson(&mut rng, sc.noise_rates[ch as usize - 1] * d);
        for _ in 0..n {
            raw.push((rng.random::<f64>() * d, ch));
        }
    }

    let end = seconds_to_fs(d);
    let normals: Vec<Option<Normal<f64>>> = (0..4)
        .map(|k| {
            let s = sc.detectors.sigma(k);
            (s > 0.0).then(|| Normal::new(0.0, s).expect("finite sigma"))
        })
        .collect();
    let mut tags: Vec<Tag> = raw
        .into_iter()
        .map(|(t, ch)| {
            let jitter = normals[ch as usize - 1].as_ref().map_or(0.0, |n| n.sample(&mut rng));
            let fs = seconds_to_fs(t + jitter).rem_euclid(end.max(1));
            Tag { channel: ch, timestamp_fs: fs }
        })
        .collect();
    tags.sort_unstable_by_key(|t| (t.timestamp_fs, t.channel));
    TagStream::new(tags, d)
}
