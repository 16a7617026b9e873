//! JSON documents written by the subcommands. Times in ps, rates in 1/s.

use schemars::{JsonSchema, Schema};
use serde::Serialize;

use crate::scenario::{GridReport, Scenario};

#[derive(Debug, Serialize, JsonSchema)]
pub struct CoherenceSummary {
    /// `a` or `b`.
    pub source: String,
    /// FWHM of the sampled coherence function, jitter included.
    pub t_c_ps: f64,
    pub grid: GridReport,
}

#[derive(Debug, Serialize, JsonSchema)]
pub struct HomdipSummary {
    /// Absent when the plateau is unreliable.
    pub visibility: Option<f64>,
    pub plateau_reliable: bool,
    pub plateau_reason: Option<String>,
    pub plateau_delay_ps: f64,
    /// `plateau`, or `max` when the plateau is unreliable.
    pub normalization: String,
    pub norm_value: f64,
    pub t_c_a_ps: f64,
    pub t_c_b_ps: f64,
    pub grid: GridReport,
}

#[derive(Debug, Serialize, JsonSchema)]
pub struct VisibilityDoc {
    pub visibility: f64,
    pub dip: f64,
    pub plateau: f64,
    pub plateau_delay_ps: f64,
    pub t_c_a_ps: f64,
    pub t_c_b_ps: f64,
    pub grid: GridReport,
    pub inputs: Scenario,
}

#[derive(Debug, Serialize, JsonSchema)]
pub struct RateSampleDoc {
    pub tau_w_ps: f64,
    /// Absent when no coherence time up to the cap reaches the target.
    pub tc_ps: Option<f64>,
    pub rate_hz: f64,
}

#[derive(Debug, Serialize, JsonSchema)]
pub struct OptResultDoc {
    pub tau_w_opt_ps: f64,
    pub tc_opt_ps: f64,
    pub rate_opt_hz: f64,
    pub curve: Vec<RateSampleDoc>,
}

#[derive(Debug, Serialize, JsonSchema)]
pub struct PulsedRateDoc {
    pub rate_hz: f64,
    pub inputs: Scenario,
}

#[derive(Debug, Serialize, JsonSchema)]
pub struct PassSwapsDoc {
    /// Expected fourfold events over the pass.
    pub swaps: f64,
    pub duration_s: f64,
    pub inputs: Scenario,
}

#[derive(Debug, Serialize, JsonSchema)]
pub struct TagsSummary {
    pub tags: usize,
    /// Per channel 1, 2', 3', 4.
    pub singles: [usize; 4],
    pub duration_ps: f64,
    pub rng_seed: u64,
}

#[derive(Debug, Serialize, JsonSchema)]
pub struct CountDoc {
    pub raw: u64,
    pub shifted_2: u64,
    pub shifted_3: u64,
    /// `raw - shifted_2 - shifted_3`; may be negative.
    pub corrected: i64,
}

#[derive(Debug, Serialize, JsonSchema)]
pub struct FbgFitSummary {
    pub residual: f64,
    pub seed_residual: f64,
    pub iterations: usize,
    pub reflectance_fwhm_pm: f64,
}

#[derive(Debug, Serialize, JsonSchema)]
pub struct OraclePoint {
    pub tau_ps: f64,
    pub engine: f64,
    pub oracle: f64,
    pub rel_dev: f64,
}

#[derive(Debug, Serialize, JsonSchema)]
pub struct OracleReport {
    pub max_rel_dev: f64,
    pub tolerance: f64,
    pub within_tolerance: bool,
    /// Median oracle/engine ratio, divided out of the oracle values.
    pub scale: f64,
    pub points: Vec<OraclePoint>,
    pub grid: GridReport,
}

#[derive(Debug, Serialize, JsonSchema)]
pub struct ErrorBody {
    /// `validation` or `numerical`.
    pub kind: String,
    pub exit_code: u8,
    pub message: String,
}

#[derive(Debug, Serialize, JsonSchema)]
pub struct ErrorDoc {
    pub error: ErrorBody,
}

/// Published schemas, by file stem.
pub fn schemas() -> Vec<(&'static str, Schema)> {
    use schemars::schema_for;
    vec![
        ("scenario", schema_for!(Scenario)),
        ("coherence", schema_for!(CoherenceSummary)),
        ("homdip", schema_for!(HomdipSummary)),
        ("visibility", schema_for!(VisibilityDoc)),
        ("optimize-rate", schema_for!(OptResultDoc)),
        ("pulsed-rate", schema_for!(PulsedRateDoc)),
        ("pass-swaps", schema_for!(PassSwapsDoc)),
        ("tags-simulate", schema_for!(TagsSummary)),
        ("tags-count", schema_for!(CountDoc)),
        ("fbg-model", schema_for!(cwhom::spectral::FbgModel)),
        ("fbg-fit", schema_for!(FbgFitSummary)),
        ("oracle-check", schema_for!(OracleReport)),
        ("error", schema_for!(ErrorDoc)),
    ]
}
