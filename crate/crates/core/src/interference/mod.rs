//! Coherence function, four-photon coincidence probability and HOM visibility.
//!
//! Channel convention: source A feeds channels 1 (trigger) and 2', source B
//! feeds 3' and 4. Photons 2' and 3' meet at the beam splitter and are
//! accepted within `[-tau_23/2, tau_23/2]`; photon 4 within
//! `[tau - tau_14/2, tau + tau_14/2]`, all relative to the channel-1 trigger.

mod coherence;
mod fourfold;
mod hom;
mod map;
mod oracle;
mod setup;

pub use coherence::{coherence_function, coherence_time, CoherenceCurve};
pub use fourfold::{fourfold_probability, FourfoldEngine, FourfoldValue};
pub use hom::{hom_curve, plateau_rule, visibility, visibility_of, HomCurve, PlateauRule};
pub use map::{
    calibrate_on_grid, calibrated_filter, identical_source_setup, map_tau_23, visibility_map, SourceShape,
    VisibilityMap,
};
pub use oracle::{fourfold_probability_oracle, OracleOptions};
pub use setup::{max_grid_spacing, CoincidenceConfig, InterferenceSetup};
