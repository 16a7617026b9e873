//! Classical time-tag streams: Monte Carlo generation, fourfold counting and
//! shifted-tag accidental estimation.
//!
//! Channels are numbered 1, 2, 3, 4 where 2 and 3 stand for the beam-splitter
//! outputs 2' and 3'. Timestamps are integer femtoseconds.

mod accidentals;
mod count;
mod sim;
mod stream;

pub use accidentals::{analytic_accidentals, AccidentalParams, AccidentalTerms};
pub use count::{count_fourfolds, count_report, shifted_accidentals, CountReport};
pub use sim::{simulate_streams, DelaySampler, SimScenario};
pub use stream::{seconds_to_fs, Tag, TagStream};
