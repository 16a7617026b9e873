//! Scenario file: every duration in picoseconds, every key checked.

use std::fs::File;
use std::path::{Path, PathBuf};

use cwhom::detection::DetectorModel;
use cwhom::interference::{
    calibrate_on_grid, calibrated_filter, max_grid_spacing, CoincidenceConfig, InterferenceSetup, SourceShape,
};
use cwhom::spectral::{
    fbg_response, joint_spectral_amplitude, make_filter, read_filter_table, FbgModel, FilterShape, FrequencyGrid,
    JointSpectralAmplitude, SpectralAmplitude,
};
use cwhom::units::{angular_to_pm, pm_to_angular, ps};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Inputs shared by all subcommands. Sections a subcommand does not use are
/// ignored by it.
#[derive(Clone, Debug, Default, Deserialize, Serialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Source heralded on channel 1, partner on channel 2'.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_a: Option<SourceSpec>,
    /// Source heralded on channel 4, partner on channel 3'. Defaults to a copy of `source_a`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_b: Option<SourceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detectors: Option<DetectorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub windows: Option<WindowSpec>,
    /// Delay scan for `coherence` and `homdip`, delay list for `oracle-check`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delays: Option<ScanSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vismap: Option<VisMapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulsed: Option<PulsedSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass_swaps: Option<PassSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<CountSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fbg_fit: Option<FbgFitSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSpec>,
}

/// Either two identical zero-phase filters set by a coherence time, or an
/// explicit filter per photon.
#[derive(Clone, Debug, Deserialize, Serialize, JsonSchema)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    Matched { shape: SourceShape, coherence_time_ps: f64 },
    Filters { signal: FilterSpec, idler: FilterSpec },
}

/// One filter. Widths are FWHM of the power transmission in wavelength.
#[derive(Clone, Debug, Deserialize, Serialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FilterSpec {
    Rect {
        fwhm_pm: f64,
    },
    Gaussian {
        fwhm_pm: f64,
    },
    Lorentzian {
        fwhm_pm: f64,
    },
    /// Member of the built-in apodized grating family.
    FbgDesign {
        bandwidth_pm: f64,
    },
    FbgModel {
        model: FbgModel,
    },
    /// JSON written by `fbg fit`; relative paths start at the scenario file.
    FbgFile {
        path: PathBuf,
    },
    /// CSV `wavelength_pm,reflectance[,phase_rad]`, wavelength offsets from line centre.
    Table {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DetectorSpec {
    /// FWHM per channel (1, 2', 3', 4).
    pub jitter_ps: [f64; 4],
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub tau_14_ps: f64,
    pub tau_23_ps: f64,
}

/// Either an explicit list or an inclusive `start..stop` range in steps.
#[derive(Clone, Debug, Default, Deserialize, Serialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values_ps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_ps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_ps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_ps: Option<f64>,
}

const MAX_SCAN_POINTS: usize = 1_000_000;

impl ScanSpec {
    /// Values in ps.
    pub fn values(&self, what: &str) -> Result<Vec<f64>, CliError> {
        let bad = |msg: &str| CliError::validation(format!("{what}: {msg}"));
        match (&self.values_ps, self.start_ps, self.stop_ps, self.step_ps) {
            (Some(v), None, None, None) => {
                if v.is_empty() {
                    return Err(bad("empty list"));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(bad("non-finite value"));
                }
                Ok(v.clone())
            }
            (None, Some(a), Some(b), Some(h)) => {
                if !(a.is_finite() && b.is_finite() && h.is_finite() && h > 0.0 && b >= a) {
                    return Err(bad("need finite start <= stop and step > 0"));
                }
                let n = ((b - a) / h + 1e-9).floor() as usize + 1;
                if n > MAX_SCAN_POINTS {
                    return Err(bad("more than a million points"));
                }
                Ok((0..n).map(|k| a + k as f64 * h).collect())
            }
            _ => Err(bad("give either values_ps or all of start_ps, stop_ps, step_ps")),
        }
    }
}

/// Overrides of the automatic frequency grid.
#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Odd number of nodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
    /// Half-width as a wavelength offset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_span_pm: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct VisMapSpec {
    pub tc_ps: ScanSpec,
    pub tau_14_ps: ScanSpec,
    pub jitter_ps: f64,
    #[serde(default = "rect")]
    pub shape: SourceShape,
}

fn rect() -> SourceShape {
    SourceShape::Rect
}

#[derive(Clone, Debug, Deserialize, Serialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RateSpec {
    /// Mean pairs per coherence time.
    pub mu: f64,
    /// Same on every channel.
    pub jitter_ps: f64,
    pub v_target: f64,
    pub tc_max_ps: f64,
    #[serde(default = "default_tau_w_range")]
    pub tau_w_range_ps: [f64; 2],
    #[serde(default = "rect")]
    pub shape: SourceShape,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
}

fn default_tau_w_range() -> [f64; 2] {
    [5.0, 1000.0]
}

fn default_samples() -> usize {
    40
}

#[derive(Clone, Debug, Deserialize, Serialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PulsedSpec {
    /// Mean pairs per pulse.
    pub mu_p: f64,
    pub tau_p_ps: f64,
    pub tc_ps: f64,
    pub f_rep_hz: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PassSpec {
    pub mu: f64,
    pub tc_ps: f64,
    pub tau_w_ps: f64,
    pub loss: LossSpec,
}

#[derive(Clone, Debug, Deserialize, Serialize, JsonSchema)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LossSpec {
    /// Same channel losses for the whole pass.
    Constant { duration_ps: f64, loss_db: [f64; 4] },
    /// CSV `t_s,loss1_db,loss2_db,loss3_db,loss4_db`.
    ProfileCsv { path: PathBuf },
}

#[derive(Clone, Debug, Deserialize, Serialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    pub pair_rate_a_hz: f64,
    pub pair_rate_b_hz: f64,
    /// Probability that two photons meeting at the beam splitter share a port.
    pub gamma: f64,
    /// Photons closer than half this window meet at the beam splitter.
    pub gamma_window_ps: f64,
    /// Uncorrelated detected counts per channel.
    pub noise_rates_hz: [f64; 4],
    pub etas: [f64; 4],
    pub duration_ps: f64,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CountSpec {
    /// Channel-4 window offset.
    #[serde(default)]
    pub delay_ps: f64,
    /// Shift for the accidental estimate; default ten times the wider window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift_ps: Option<f64>,
    /// Stream length; default the last tag.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_ps: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct FbgFitSpec {
    /// Start of the fit; default the design-family grating of the trace's bandwidth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<FbgSeed>,
}

#[derive(Clone, Debug, Deserialize, Serialize, JsonSchema)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FbgSeed {
    DesignBandwidthPm(f64),
    Model(FbgModel),
}

#[derive(Clone, Debug, Deserialize, Serialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    /// Time-domain integration step; automatic if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_step_ps: Option<f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    1e-3
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec { time_step_ps: None, tolerance: default_tolerance() }
    }
}

impl Scenario {
    /// Identical rectangular sources with a 165 ps coherence time, default
    /// detectors, windows (40, 2000) ps.
    pub fn reference() -> Self {
        Scenario {
            source_a: Some(SourceSpec::Matched { shape: SourceShape::Rect, coherence_time_ps: 165.0 }),
            windows: Some(WindowSpec { tau_14_ps: 40.0, tau_23_ps: 2000.0 }),
            ..Scenario::default()
        }
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf), CliError> {
        let file = File::open(path)
            .map_err(|e| CliError::validation(format!("cannot read scenario {}: {e}", path.display())))?;
        let sc: Scenario = serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| CliError::validation(format!("scenario {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((sc, base))
    }

    pub fn detectors(&self) -> Result<DetectorModel, CliError> {
        match &self.detectors {
            Some(d) => Ok(DetectorModel::new(d.jitter_ps.map(ps))?),
            None => Ok(DetectorModel::default()),
        }
    }

    pub fn windows(&self) -> Result<CoincidenceConfig, CliError> {
        let w = self.windows.ok_or_else(|| CliError::validation("scenario needs `windows`"))?;
        Ok(CoincidenceConfig::new(ps(w.tau_14_ps), ps(w.tau_23_ps))?)
    }

    pub fn section<'a, T>(&self, field: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        field.as_ref().ok_or_else(|| CliError::validation(format!("scenario needs `{name}`")))
    }
}

/// A filter ready to be sampled and the grid half-width it needs [rad/s].
struct Resolved {
    kind: ResolvedKind,
    half_span: f64,
}

enum ResolvedKind {
    Shape(FilterShape),
    Fbg(FbgModel),
    /// Width set on the final grid; `tc` in s.
    Matched {
        shape: SourceShape,
        tc: f64,
    },
}

fn positive_pm(v: f64, what: &str) -> Result<f64, CliError> {
    if !(v.is_finite() && v > 0.0) {
        return Err(CliError::validation(format!("{what} must be positive")));
    }
    Ok(pm_to_angular(v))
}

fn resolve_path(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn resolve_fbg(model: FbgModel) -> Result<Resolved, CliError> {
    let bw = model.reflectance_fwhm()?;
    let half_span = 8.0 * bw + model.detuning_offset.abs();
    Ok(Resolved { kind: ResolvedKind::Fbg(model), half_span })
}

fn resolve_filter(spec: &FilterSpec, base: &Path) -> Result<Resolved, CliError> {
    let shaped = |shape: SourceShape, fwhm_pm: f64| -> Result<Resolved, CliError> {
        let w = positive_pm(fwhm_pm, "filter fwhm_pm")?;
        Ok(Resolved { kind: ResolvedKind::Shape(shape.filter(w)), half_span: shape.span_factor() * w })
    };
    match spec {
        FilterSpec::Rect { fwhm_pm } => shaped(SourceShape::Rect, *fwhm_pm),
        FilterSpec::Gaussian { fwhm_pm } => shaped(SourceShape::Gaussian, *fwhm_pm),
        FilterSpec::Lorentzian { fwhm_pm } => shaped(SourceShape::Lorentzian, *fwhm_pm),
        FilterSpec::FbgDesign { bandwidth_pm } => {
            resolve_fbg(FbgModel::design(positive_pm(*bandwidth_pm, "bandwidth_pm")?)?)
        }
        FilterSpec::FbgModel { model } => resolve_fbg(model.clone()),
        FilterSpec::FbgFile { path } => {
            let path = resolve_path(base, path);
            let file =
                File::open(&path).map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
            let model: FbgModel = serde_json::from_reader(std::io::BufReader::new(file))
                .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
            resolve_fbg(model)
        }
        FilterSpec::Table { path } => {
            let table = read_filter_table(resolve_path(base, path))?;
            let half_span = table.rows().iter().map(|r| r.omega.abs()).fold(0.0, f64::max);
            Ok(Resolved { kind: ResolvedKind::Shape(FilterShape::Tabulated(table)), half_span })
        }
    }
}

fn resolve_source(spec: &SourceSpec, base: &Path) -> Result<[Resolved; 2], CliError> {
    match spec {
        SourceSpec::Matched { shape, coherence_time_ps } => {
            if !(coherence_time_ps.is_finite() && *coherence_time_ps > 0.0) {
                return Err(CliError::validation("coherence_time_ps must be positive"));
            }
            let tc = ps(*coherence_time_ps);
            let (w, _) = calibrated_filter(*shape, tc, 3.0 * tc)?;
            // the provisional width only sizes the grid, with room for the correction
            let one = || Resolved {
                kind: ResolvedKind::Matched { shape: *shape, tc },
                half_span: 1.25 * shape.span_factor() * w,
            };
            Ok([one(), one()])
        }
        SourceSpec::Filters { signal, idler } => Ok([resolve_filter(signal, base)?, resolve_filter(idler, base)?]),
    }
}

fn sample(f: &Resolved, grid: &FrequencyGrid) -> Result<SpectralAmplitude, CliError> {
    Ok(match &f.kind {
        ResolvedKind::Shape(s) => make_filter(s, grid)?,
        ResolvedKind::Fbg(m) => fbg_response(m, grid)?,
        ResolvedKind::Matched { shape, tc } => make_filter(&shape.filter(calibrate_on_grid(*shape, *tc, grid)?), grid)?,
    })
}

/// Both sources sampled on one grid.
pub struct Sources {
    pub jsa_a: JointSpectralAmplitude,
    pub jsa_b: JointSpectralAmplitude,
    pub grid: FrequencyGrid,
}

impl Sources {
    /// Builds the sources on a grid resolving time scales up to
    /// `max(t_fixed, tc_multiple * T_c)`; the coherence time is only known
    /// after a first pass, so the grid is refined once if needed.
    pub fn build(sc: &Scenario, base: &Path, t_fixed: f64, tc_multiple: f64) -> Result<Self, CliError> {
        let spec_a = sc.section(&sc.source_a, "source_a")?;
        let spec_b = sc.source_b.as_ref().unwrap_or(spec_a);
        let a = resolve_source(spec_a, base)?;
        let b = resolve_source(spec_b, base)?;
        let override_ = sc.grid.unwrap_or_default();
        let half_span = match override_.half_span_pm {
            Some(pm) => positive_pm(pm, "grid half_span_pm")?,
            None => a.iter().chain(&b).map(|f| f.half_span).fold(0.0, f64::max),
        };
        let make_grid = |t: f64| -> Result<FrequencyGrid, CliError> {
            Ok(match override_.n_points {
                Some(n) => FrequencyGrid::new(n, half_span)?,
                None => FrequencyGrid::resolving(half_span, max_grid_spacing(1.1 * t), 65)?,
            })
        };
        let build_on = |grid: FrequencyGrid| -> Result<Sources, CliError> {
            let jsa = |f: &[Resolved; 2]| -> Result<JointSpectralAmplitude, CliError> {
                Ok(joint_spectral_amplitude(&sample(&f[0], &grid)?, &sample(&f[1], &grid)?, None)?)
            };
            Ok(Sources { jsa_a: jsa(&a)?, jsa_b: jsa(&b)?, grid })
        };

        if override_.n_points.is_some() {
            // refuse before calibrating anything on a grid that cannot be used
            let grid = make_grid(t_fixed)?;
            let max_spacing = max_grid_spacing(t_fixed);
            if grid.spacing() > max_spacing * (1.0 + 1e-12) {
                let required_points = FrequencyGrid::resolving(grid.span(), max_spacing, 3)?.n_points();
                return Err(cwhom::Error::Resolution { spacing: grid.spacing(), max_spacing, required_points }.into());
            }
            return build_on(grid);
        }
        let first = build_on(make_grid(t_fixed)?)?;
        let tc = first.coherence_times()?;
        let t_need = t_fixed.max(tc_multiple * tc.0.max(tc.1));
        let grid = make_grid(t_need)?;
        if grid.n_points() > first.grid.n_points() {
            build_on(grid)
        } else {
            Ok(first)
        }
    }

    pub fn coherence_times(&self) -> Result<(f64, f64), CliError> {
        use cwhom::interference::coherence_time;
        let a = coherence_time(&self.jsa_a, 0.0, 0.0)?;
        let b = if self.jsa_a == self.jsa_b { a } else { coherence_time(&self.jsa_b, 0.0, 0.0)? };
        Ok((a, b))
    }

    pub fn into_setup(
        self,
        detectors: DetectorModel,
        windows: CoincidenceConfig,
    ) -> Result<InterferenceSetup, CliError> {
        Ok(InterferenceSetup::new(self.jsa_a, self.jsa_b, detectors, windows)?)
    }
}

/// Grid as reported back to the user.
#[derive(Clone, Copy, Debug, Serialize, JsonSchema)]
pub struct GridReport {
    pub n_points: usize,
    pub half_span_pm: f64,
}

impl From<&FrequencyGrid> for GridReport {
    fn from(g: &FrequencyGrid) -> Self {
        GridReport { n_points: g.n_points(), half_span_pm: angular_to_pm(g.span()) }
    }
}

/// Setup for the interference subcommands: time scales cover the windows,
/// the delays, the plateau and three coherence times.
pub fn build_setup(sc: &Scenario, base: &Path, max_abs_tau_ps: f64) -> Result<InterferenceSetup, CliError> {
    let detectors = sc.detectors()?;
    let windows = sc.windows()?;
    let t_fixed = windows.tau_14.max(windows.tau_23).max(ps(max_abs_tau_ps.abs())).max(3.0 * detectors.max_jitter());
    Sources::build(sc, base, t_fixed, 3.0)?.into_setup(detectors, windows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        let bad = r#"{"windows": {"tau_14_ps": 40, "tau_23_ps": 2000, "tau_99_ps": 1}}"#;
        assert!(serde_json::from_str::<Scenario>(bad).is_err());
        let bad = r#"{"source_a": {"filters": {"signal": {"kind": "rect", "fwhm_pm": 40, "x": 1},
                      "idler": {"kind": "rect", "fwhm_pm": 40}}}}"#;
        assert!(serde_json::from_str::<Scenario>(bad).is_err());
        let bad = r#"{"source_a": {"matched": {"shape": "rect", "coherence_time_ps": 100, "x": 1}}}"#;
        assert!(serde_json::from_str::<Scenario>(bad).is_err());
        let bad = r#"{"colour": 1}"#;
        assert!(serde_json::from_str::<Scenario>(bad).is_err());
    }

    #[test]
    fn scan_forms() {
        let r = ScanSpec { start_ps: Some(-10.0), stop_ps: Some(10.0), step_ps: Some(5.0), ..Default::default() };
        assert_eq!(r.values("d").unwrap(), vec![-10.0, -5.0, 0.0, 5.0, 10.0]);
        let l = ScanSpec { values_ps: Some(vec![1.0, 2.0]), ..Default::default() };
        assert_eq!(l.values("d").unwrap(), vec![1.0, 2.0]);
        let both = ScanSpec { values_ps: Some(vec![1.0]), step_ps: Some(1.0), ..Default::default() };
        assert!(both.values("d").is_err());
        let down = ScanSpec { start_ps: Some(1.0), stop_ps: Some(0.0), step_ps: Some(1.0), ..Default::default() };
        assert!(down.values("d").is_err());
    }

    #[test]
    fn reference_scenario_round_trips() {
        let s = serde_json::to_string(&Scenario::reference()).unwrap();
        let back: Scenario = serde_json::from_str(&s).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), s);
    }

    #[test]
    fn grid_refined_for_coherence_time() {
        let mut sc = Scenario::reference();
        sc.source_a = Some(SourceSpec::Matched { shape: SourceShape::Rect, coherence_time_ps: 400.0 });
        let src = Sources::build(&sc, Path::new("."), ps(10.0), 3.0).unwrap();
        let tc = src.coherence_times().unwrap().0;
        assert!(src.grid.spacing() <= max_grid_spacing(1.1 * 3.0 * tc) * (1.0 + 1e-12));
    }
}
