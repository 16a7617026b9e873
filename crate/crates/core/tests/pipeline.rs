//! Cross-module checks too slow or too wide for unit tests.

mod common;

use common::*;
use cwhom::detection::DetectorModel;
use cwhom::interference::*;
use cwhom::spectral::*;
use cwhom::timetags::*;
use cwhom::units::*;

fn noisy_stream(seed: u64) -> (TagStream, CoincidenceConfig) {
    let grid = FrequencyGrid::new(401, 1e11).unwrap();
    let jsa = JointSpectralAmplitude::rect_with_coherence_time(grid, ps(100.0)).unwrap();
    let delays: Vec<f64> = (-300..=300).map(|k| ps(k as f64)).collect();
    let sc = SimScenario {
        pair_rate_a: 2e7,
        pair_rate_b: 2e7,
        internal_delay: coherence_function(&jsa, 0.0, 0.0, &delays).unwrap(),
        gamma: 0.5,
        gamma_window: ps(200.0),
        noise_rates: [1e4, 1e5, 1e5, 1e4],
        etas: [0.7; 4],
        detectors: DetectorModel::default(),
        duration: 2e-3,
        rng_seed: seed,
    };
    (simulate_streams(&sc).unwrap(), CoincidenceConfig::new(ps(5000.0), ps(200.0)).unwrap())
}

#[test]
fn tag_csv_round_trip_preserves_counts() {
    let (stream, cfg) = noisy_stream(21);
    assert!(stream.len() > 10_000);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tags.csv");
    stream.write_csv(std::fs::File::create(&path).unwrap()).unwrap();
    let back = TagStream::read_csv(std::fs::File::open(&path).unwrap(), Some(stream.duration())).unwrap();
    assert_eq!(back, stream);
    let delta = ps(50_000.0);
    assert_eq!(count_report(&back, &cfg, 0.0, delta).unwrap(), count_report(&stream, &cfg, 0.0, delta).unwrap());
}

#[test]
fn shifted_counts_bounded_by_raw_plus_noise() {
    // the accidental estimate never exceeds what a window can hold
    let (stream, cfg) = noisy_stream(22);
    let r = count_report(&stream, &cfg, 0.0, ps(50_000.0)).unwrap();
    let triggers = stream.count_in(1) as u64;
    assert!(r.raw <= triggers && r.shifted_2 <= triggers && r.shifted_3 <= triggers);
    assert!(r.raw > 0);
    assert_eq!(r.corrected, r.raw as i64 - r.shifted_2 as i64 - r.shifted_3 as i64);
}

#[test]
fn engine_matches_time_domain_for_gratings() {
    // unequal grating sources, nonzero phase, per-channel jitter
    let cfg = CoincidenceConfig::new(ps(80.0), ps(600.0)).unwrap();
    let grid = fbg_grid(ps(600.0));
    let setup = InterferenceSetup::new(
        fbg_source(SOURCE_A_PM, &grid),
        fbg_source(SOURCE_B_PM, &grid),
        DetectorModel::default(),
        cfg,
    )
    .unwrap();
    let taus = [ps(-100.0), 0.0, ps(150.0)];
    let ratios: Vec<f64> = taus
        .iter()
        .map(|&t| {
            fourfold_probability_oracle(&setup, t, OracleOptions::default()).unwrap()
                / fourfold_probability(&setup, t).unwrap()
        })
        .collect();
    for r in &ratios {
        assert!((r / ratios[1] - 1.0).abs() < 1e-3, "{ratios:?}");
    }
}

#[test]
fn identical_zero_phase_sources_give_even_curve() {
    let cfg = CoincidenceConfig::new(ps(40.0), ps(2000.0)).unwrap();
    let setup =
        identical_source_setup(SourceShape::Gaussian, ps(150.0), DetectorModel::default(), cfg, ps(400.0)).unwrap();
    let delays: Vec<f64> = (-8..=8).map(|k| ps(50.0 * k as f64)).collect();
    let c = hom_curve(&setup, &delays).unwrap();
    for k in 0..delays.len() {
        let (a, b) = (c.values[k], c.values[delays.len() - 1 - k]);
        assert!((a - b).abs() <= 1e-9 * c.plateau, "{k}: {a} vs {b}");
    }
    assert!(c.values[8] < c.values[7] && c.values[8] < c.values[9]);
    assert_eq!(c.values[8], c.dip);
}

#[test]
fn fitted_grating_reproduces_coherence_time() {
    let truth = FbgModel::design(pm_to_angular(27.0)).unwrap();
    let seed = FbgModel { length: truth.length * 0.97, peak_kappa: truth.peak_kappa * 1.03, ..truth.clone() };
    let fit = fit_fbg(&synthetic_trace(&truth, 61), &seed, 5).unwrap();
    let grid = fbg_grid(ps(1000.0));
    let tc = |m: &FbgModel| coherence_time(&source_from_models(m, m, &grid), 0.0, 0.0).unwrap();
    let (t_fit, t_true) = (tc(&fit.model), tc(&truth));
    assert!((t_fit / t_true - 1.0).abs() < 1e-3, "{t_fit:e} vs {t_true:e}");
}
