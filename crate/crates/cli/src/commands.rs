use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use cwhom::interference::{
    coherence_function, fourfold_probability_oracle, hom_curve, plateau_rule, visibility, visibility_map,
    FourfoldEngine, OracleOptions,
};
use cwhom::rates::{optimize_window, pass_swaps, pulsed_rate, LossProfile, RateQuery};
use cwhom::spectral::{fit_fbg, FbgModel, ReflectanceSample};
use cwhom::timetags::{count_report, simulate_streams, SimScenario, TagStream};
use cwhom::units::{pm_to_angular, ps, to_ps};
use serde::{Deserialize, Serialize};

use crate::docs::*;
use crate::scenario::{build_setup, FbgSeed, GridReport, LossSpec, Scenario, Sources};
use crate::CliError;

/// Where artifacts go. CSV subcommands also print a JSON summary to stdout,
/// but only when the CSV itself goes to a file.
pub struct Ctx {
    pub scenario: Scenario,
    pub base: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl Ctx {
    fn emit(&self, bytes: &[u8]) -> Result<(), CliError> {
        match &self.out {
            Some(p) => {
                std::fs::write(p, bytes).map_err(|e| CliError::validation(format!("cannot write {}: {e}", p.display())))
            }
            None => {
                let mut o = std::io::stdout().lock();
                o.write_all(bytes).and_then(|_| o.flush()).map_err(|e| CliError::validation(e.to_string()))
            }
        }
    }

    fn emit_json(&self, doc: &impl Serialize) -> Result<(), CliError> {
        self.emit(&json_bytes(doc)?)
    }

    fn summary(&self, doc: &impl Serialize) -> Result<(), CliError> {
        if self.out.is_some() {
            let mut o = std::io::stdout().lock();
            o.write_all(&json_bytes(doc)?).map_err(|e| CliError::validation(e.to_string()))?;
        }
        Ok(())
    }

    fn rng_seed(&self) -> u64 {
        self.seed.or(self.scenario.rng_seed).unwrap_or(0)
    }
}

pub fn json_bytes(doc: &impl Serialize) -> Result<Vec<u8>, CliError> {
    let mut v = serde_json::to_vec_pretty(doc).map_err(|e| CliError::validation(e.to_string()))?;
    v.push(b'\n');
    Ok(v)
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> cwhom::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SourceId {
    A,
    B,
}

pub fn coherence(ctx: &Ctx, which: SourceId) -> Result<(), CliError> {
    let sc = &ctx.scenario;
    let det = sc.detectors()?;
    let delays_ps = sc.delays.as_ref().map(|d| d.values("delays")).transpose()?;
    let max_tau = delays_ps.as_ref().map_or(0.0, |d| d.iter().fold(0.0, |m: f64, t| m.max(t.abs())));
    // the default scan spans five coherence times
    let src = Sources::build(sc, &ctx.base, ps(max_tau).max(3.0 * det.max_jitter()), 5.0)?;
    let (tc_a, tc_b) = src.coherence_times()?;
    let (jsa, tc, jit) = match which {
        SourceId::A => (&src.jsa_a, tc_a, (det.jitter_fwhm[0], det.jitter_fwhm[1])),
        SourceId::B => (&src.jsa_b, tc_b, (det.jitter_fwhm[3], det.jitter_fwhm[2])),
    };
    let delays: Vec<f64> = match delays_ps {
        Some(d) => d.into_iter().map(ps).collect(),
        None => {
            let half = 5.0 * tc;
            (0..=1000).map(|k| -half + k as f64 * half / 500.0).collect()
        }
    };
    let curve = coherence_function(jsa, jit.0, jit.1, &delays)?;
    ctx.emit(&csv_bytes(|b| curve.write_csv(b))?)?;
    ctx.summary(&CoherenceSummary {
        source: if which == SourceId::A { "a" } else { "b" }.into(),
        t_c_ps: to_ps(curve.t_c_fwhm),
        grid: GridReport::from(&src.grid),
    })
}

pub fn homdip(ctx: &Ctx) -> Result<(), CliError> {
    let sc = &ctx.scenario;
    let delays_ps = sc.delays.as_ref().map(|d| d.values("delays")).transpose()?;
    let max_tau = delays_ps.as_ref().map_or(0.0, |d| d.iter().fold(0.0, |m: f64, t| m.max(t.abs())));
    let setup = build_setup(sc, &ctx.base, max_tau)?;
    let delays: Vec<f64> = match delays_ps {
        Some(d) => d.into_iter().map(ps).collect(),
        None => {
            let half = plateau_rule(&setup).delay;
            (0..=240).map(|k| -half + k as f64 * half / 120.0).collect()
        }
    };
    let curve = hom_curve(&setup, &delays)?;
    let rule = &curve.plateau_rule;
    let (normalization, norm) = if rule.reliable && curve.plateau > 0.0 {
        ("plateau", curve.plateau)
    } else {
        ("max", curve.values.iter().copied().fold(0.0, f64::max))
    };
    if norm.is_nan() || norm <= 0.0 {
        return Err(CliError::numerical("four-photon probability vanishes on the whole scan"));
    }
    let bytes = csv_bytes(|b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["tau_ps", "normalized", "raw"])?;
        for (t, v) in curve.delays.iter().zip(&curve.values) {
            w.write_record([to_ps(*t).to_string(), (v / norm).to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    ctx.emit(&bytes)?;
    let (tc_a, tc_b) = setup.coherence_times();
    ctx.summary(&HomdipSummary {
        visibility: visibility(&curve).ok(),
        plateau_reliable: rule.reliable,
        plateau_reason: rule.reason.clone(),
        plateau_delay_ps: to_ps(rule.delay),
        normalization: normalization.into(),
        norm_value: norm,
        t_c_a_ps: to_ps(tc_a),
        t_c_b_ps: to_ps(tc_b),
        grid: GridReport::from(setup.grid()),
    })
}

pub fn visibility_cmd(ctx: &Ctx) -> Result<(), CliError> {
    let sc = &ctx.scenario;
    let setup = build_setup(sc, &ctx.base, 0.0)?;
    let curve = hom_curve(&setup, &[])?;
    let v = visibility(&curve)?;
    let (tc_a, tc_b) = setup.coherence_times();
    ctx.emit_json(&VisibilityDoc {
        visibility: v,
        dip: curve.dip,
        plateau: curve.plateau,
        plateau_delay_ps: to_ps(curve.plateau_rule.delay),
        t_c_a_ps: to_ps(tc_a),
        t_c_b_ps: to_ps(tc_b),
        grid: GridReport::from(setup.grid()),
        inputs: sc.clone(),
    })
}

pub fn vismap(ctx: &Ctx) -> Result<(), CliError> {
    let spec = ctx.scenario.section(&ctx.scenario.vismap, "vismap")?;
    let tcs: Vec<f64> = spec.tc_ps.values("vismap.tc_ps")?.into_iter().map(ps).collect();
    let taus: Vec<f64> = spec.tau_14_ps.values("vismap.tau_14_ps")?.into_iter().map(ps).collect();
    let map = visibility_map(&tcs, &taus, ps(spec.jitter_ps), spec.shape)?;
    ctx.emit(&csv_bytes(|b| map.write_csv(b))?)
}

pub fn optimize_rate(ctx: &Ctx) -> Result<(), CliError> {
    let spec = ctx.scenario.section(&ctx.scenario.rate, "rate")?;
    let q = RateQuery {
        mu: spec.mu,
        jitter: ps(spec.jitter_ps),
        v_target: spec.v_target,
        tc_max: ps(spec.tc_max_ps),
        tau_w_range: (ps(spec.tau_w_range_ps[0]), ps(spec.tau_w_range_ps[1])),
        filter_kind: spec.shape,
        n_samples: spec.n_samples,
    };
    let r = optimize_window(&q)?;
    ctx.emit_json(&OptResultDoc {
        tau_w_opt_ps: to_ps(r.tau_w_opt),
        tc_opt_ps: to_ps(r.tc_opt),
        rate_opt_hz: r.rate_opt,
        curve: r
            .curve
            .iter()
            .map(|s| RateSampleDoc { tau_w_ps: to_ps(s.tau_w), tc_ps: s.tc.map(to_ps), rate_hz: s.rate })
            .collect(),
    })
}

pub fn pulsed(ctx: &Ctx) -> Result<(), CliError> {
    let spec = ctx.scenario.section(&ctx.scenario.pulsed, "pulsed")?;
    let rate = pulsed_rate(spec.mu_p, ps(spec.tau_p_ps), ps(spec.tc_ps), spec.f_rep_hz)?;
    ctx.emit_json(&PulsedRateDoc {
        rate_hz: rate,
        inputs: Scenario { pulsed: Some(spec.clone()), ..Default::default() },
    })
}

pub fn swaps(ctx: &Ctx) -> Result<(), CliError> {
    let spec = ctx.scenario.section(&ctx.scenario.pass_swaps, "pass_swaps")?;
    let profile = match &spec.loss {
        LossSpec::Constant { duration_ps, loss_db } => LossProfile::constant(ps(*duration_ps), *loss_db)?,
        LossSpec::ProfileCsv { path } => {
            let path = if path.is_absolute() { path.clone() } else { ctx.base.join(path) };
            LossProfile::read_csv(open(&path)?)?
        }
    };
    let n = pass_swaps(&profile, spec.mu, ps(spec.tc_ps), ps(spec.tau_w_ps))?;
    ctx.emit_json(&PassSwapsDoc {
        swaps: n,
        duration_s: profile.duration(),
        inputs: Scenario { pass_swaps: Some(spec.clone()), ..Default::default() },
    })
}

pub fn tags_simulate(ctx: &Ctx) -> Result<(), CliError> {
    let sc = &ctx.scenario;
    let spec = sc.section(&sc.simulate, "simulate")?;
    // partner delays of source A drive both sources; six coherence times cover the tails
    let src = Sources::build(sc, &ctx.base, 0.0, 6.0)?;
    let tc = src.coherence_times()?.0;
    let half = 6.0 * tc;
    let delays: Vec<f64> = (0..=1200).map(|k| -half + k as f64 * half / 600.0).collect();
    let internal_delay = coherence_function(&src.jsa_a, 0.0, 0.0, &delays)?;
    let rng_seed = ctx.rng_seed();
    let sim = SimScenario {
        pair_rate_a: spec.pair_rate_a_hz,
        pair_rate_b: spec.pair_rate_b_hz,
        internal_delay,
        gamma: spec.gamma,
        gamma_window: ps(spec.gamma_window_ps),
        noise_rates: spec.noise_rates_hz,
        etas: spec.etas,
        detectors: sc.detectors()?,
        duration: ps(spec.duration_ps),
        rng_seed,
    };
    let stream = simulate_streams(&sim)?;
    ctx.emit(&csv_bytes(|b| stream.write_csv(b))?)?;
    ctx.summary(&TagsSummary {
        tags: stream.len(),
        singles: [1, 2, 3, 4].map(|c| stream.count_in(c)),
        duration_ps: spec.duration_ps,
        rng_seed,
    })
}

pub fn tags_count(ctx: &Ctx, tags: &Path) -> Result<(), CliError> {
    let sc = &ctx.scenario;
    let cfg = sc.windows()?;
    let spec = sc.count.clone().unwrap_or_default();
    let stream = TagStream::read_csv(open(tags)?, spec.duration_ps.map(ps))?;
    let shift = spec.shift_ps.map_or(10.0 * cfg.tau_14.max(cfg.tau_23), ps);
    let r = count_report(&stream, &cfg, ps(spec.delay_ps), shift)?;
    ctx.emit_json(&CountDoc { raw: r.raw, shifted_2: r.shifted_2, shifted_3: r.shifted_3, corrected: r.corrected })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceRow {
    wavelength_pm: f64,
    reflectance: f64,
    #[serde(default)]
    #[allow(dead_code)]
    phase_rad: Option<f64>,
}

/// FWHM [rad/s] and peak position of a reflectance trace sorted by frequency.
fn trace_width(trace: &[ReflectanceSample]) -> Result<(f64, f64), CliError> {
    let (k, peak) =
        trace
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, s)| if s.reflectance > b.1 { (i, s.reflectance) } else { b });
    let half = 0.5 * peak;
    let cross = |i: usize, o: usize| {
        let (a, b) = (trace[i], trace[o]);
        a.omega + (a.reflectance - half) / (a.reflectance - b.reflectance) * (b.omega - a.omega)
    };
    let unbracketed = || CliError::validation("trace does not fall to half maximum on both sides; give fbg_fit.seed");
    let hi = (k + 1..trace.len()).find(|&i| trace[i].reflectance < half).ok_or_else(unbracketed)?;
    let lo = (0..k).rev().find(|&i| trace[i].reflectance < half).ok_or_else(unbracketed)?;
    Ok((cross(hi - 1, hi) - cross(lo + 1, lo), trace[k].omega))
}

pub fn fbg_fit(ctx: &Ctx, trace_path: &Path) -> Result<(), CliError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(trace_path)?);
    let mut trace = Vec::new();
    for row in r.deserialize() {
        let row: TraceRow = row.map_err(|e| CliError::validation(format!("{}: {e}", trace_path.display())))?;
        trace.push(ReflectanceSample { omega: -pm_to_angular(row.wavelength_pm), reflectance: row.reflectance });
    }
    trace.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    let spec = ctx.scenario.fbg_fit.clone().unwrap_or_default();
    let seed = match spec.seed {
        Some(FbgSeed::Model(m)) => m,
        Some(FbgSeed::DesignBandwidthPm(bw)) => FbgModel::design(pm_to_angular(bw))?,
        None => {
            let (bw, centre) = trace_width(&trace)?;
            FbgModel { detuning_offset: centre, ..FbgModel::design(bw)? }
        }
    };
    let fit = fit_fbg(&trace, &seed, ctx.rng_seed())?;
    ctx.emit_json(&fit.model)?;
    ctx.summary(&FbgFitSummary {
        residual: fit.residual,
        seed_residual: fit.seed_residual,
        iterations: fit.iterations,
        reflectance_fwhm_pm: cwhom::units::angular_to_pm(fit.model.reflectance_fwhm()?),
    })
}

pub fn oracle_check(ctx: &Ctx) -> Result<(), CliError> {
    let sc = &ctx.scenario;
    let spec = sc.oracle.clone().unwrap_or_default();
    let delays_ps = sc.delays.as_ref().map(|d| d.values("delays")).transpose()?;
    let max_tau = delays_ps.as_ref().map_or(0.0, |d| d.iter().fold(0.0, |m: f64, t| m.max(t.abs())));
    let setup = build_setup(sc, &ctx.base, max_tau)?;
    let delays: Vec<f64> = match delays_ps {
        Some(d) => d.into_iter().map(ps).collect(),
        None => vec![0.0, 0.5 * setup.max_coherence_time(), plateau_rule(&setup).delay],
    };
    let max_tau = delays.iter().fold(0.0, |m: f64, t| m.max(t.abs()));
    setup.check_resolution(max_tau)?;
    let engine = FourfoldEngine::new(&setup)?;
    let opts = OracleOptions { time_step: spec.time_step_ps.map(ps) };
    let mut pairs = Vec::with_capacity(delays.len());
    for &t in &delays {
        pairs.push((engine.probability(t)?, fourfold_probability_oracle(&setup, t, opts)?));
    }
    // the two routes share the physics but not the global scale
    let mut ratios: Vec<f64> = pairs.iter().map(|(e, o)| o / e).collect();
    ratios.sort_by(f64::total_cmp);
    let scale = ratios[ratios.len() / 2];
    if !(scale.is_finite() && scale > 0.0) {
        return Err(CliError::numerical("four-photon probability vanishes at the checked delays"));
    }
    let points: Vec<OraclePoint> = delays
        .iter()
        .zip(&pairs)
        .map(|(&t, &(e, o))| OraclePoint {
            tau_ps: to_ps(t),
            engine: e,
            oracle: o / scale,
            rel_dev: (o / scale / e - 1.0).abs(),
        })
        .collect();
    let max_rel_dev = points.iter().map(|p| p.rel_dev).fold(0.0, f64::max);
    ctx.emit_json(&OracleReport {
        max_rel_dev,
        tolerance: spec.tolerance,
        within_tolerance: max_rel_dev <= spec.tolerance,
        scale,
        points,
        grid: GridReport::from(setup.grid()),
    })
}
