use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{seconds_to_fs, TagStream};
use crate::interference::CoincidenceConfig;
use crate::{Error, Result};

/// Fourfold counts at one delay. `corrected` may go negative on noisy data.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountReport {
    pub raw: u64,
    pub shifted_2: u64,
    pub shifted_3: u64,
    pub corrected: i64,
}

/// Is there a time in sorted `ts` with 2|t - centre| <= width?
fn hit(ts: &[i64], centre: i64, width: i64) -> bool {
    let k = ts.partition_point(|&t| 2 * (t - centre) < -width);
    k < ts.len() && 2 * (ts[k] - centre) <= width
}

fn count_channels(ch: &[Vec<i64>; 4], cfg: &CoincidenceConfig, tau: f64) -> u64 {
    let w14 = seconds_to_fs(cfg.tau_14);
    let w23 = seconds_to_fs(cfg.tau_23);
    let shift = seconds_to_fs(tau);
    ch[0].par_iter().filter(|&&t1| hit(&ch[1], t1, w23) && hit(&ch[2], t1, w23) && hit(&ch[3], t1 + shift, w14)).count()
        as u64
}

fn channels(stream: &TagStream) -> [Vec<i64>; 4] {
    [1, 2, 3, 4].map(|c| stream.channel_times(c))
}

/// Counts channel-1 triggers with a 2' and a 3' tag inside `tau_23` around
/// the trigger and a channel-4 tag inside `tau_14` around trigger + `tau`.
/// Window edges are inclusive; each trigger counts at most once.
pub fn count_fourfolds(stream: &TagStream, cfg: &CoincidenceConfig, tau: f64) -> Result<u64> {
    cfg.validate()?;
    Ok(count_channels(&channels(stream), cfg, tau))
}

fn check_shift(cfg: &CoincidenceConfig, delta: f64, channel: u8) -> Result<()> {
    if channel != 2 && channel != 3 {
        return Err(Error::invalid("only channels 2 and 3 can be shifted"));
    }
    if !(delta.is_finite() && delta >= 10.0 * cfg.tau_23) {
        return Err(Error::invalid("shift must be at least ten times tau_23"));
    }
    Ok(())
}

fn shift_channel(ch: &mut [Vec<i64>; 4], channel: u8, delta: i64, period: i64) {
    let v = &mut ch[channel as usize - 1];
    for t in v.iter_mut() {
        *t = (*t + delta).rem_euclid(period);
    }
    v.sort_unstable();
}

/// Fourfold count after delaying every tag of `channel` (2 or 3) by `delta`,
/// wrapped around the stream duration. Estimates the accidentals that
/// involve an uncorrelated photon in that channel.
pub fn shifted_accidentals(
    stream: &TagStream,
    cfg: &CoincidenceConfig,
    tau: f64,
    delta: f64,
    channel: u8,
) -> Result<u64> {
    cfg.validate()?;
    check_shift(cfg, delta, channel)?;
    let mut ch = channels(stream);
    shift_channel(&mut ch, channel, seconds_to_fs(delta), stream.duration_fs().max(1));
    Ok(count_channels(&ch, cfg, tau))
}

pub fn count_report(stream: &TagStream, cfg: &CoincidenceConfig, tau: f64, delta: f64) -> Result<CountReport> {
    cfg.validate()?;
    check_shift(cfg, delta, 2)?;
    let ch = channels(stream);
    let raw = count_channels(&ch, cfg, tau);
    let shifted = |c: u8| {
        let mut s = ch.clone();
        shift_channel(&mut s, c, seconds_to_fs(delta), stream.duration_fs().max(1));
        count_channels(&s, cfg, tau)
    };
    let (shifted_2, shifted_3) = (shifted(2), shifted(3));
    Ok(CountReport { raw, shifted_2, shifted_3, corrected: raw as i64 - shifted_2 as i64 - shifted_3 as i64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timetags::Tag;
    use crate::units::ps;

    fn fixture(offset_fs: i64) -> TagStream {
        let tags = [(1u8, 0i64), (3, -20_000), (4, 5_000), (2, 10_000)];
        let mut tags: Vec<Tag> = tags.iter().map(|&(c, t)| Tag { channel: c, timestamp_fs: t + offset_fs }).collect();
        tags.sort_by_key(|t| t.timestamp_fs);
        TagStream::new(tags, 1e-6).unwrap()
    }

    #[test]
    fn empty_stream_counts_zero() {
        let s = TagStream::empty(1e-3).unwrap();
        let cfg = CoincidenceConfig::new(ps(40.0), ps(100.0)).unwrap();
        assert_eq!(count_fourfolds(&s, &cfg, 0.0).unwrap(), 0);
        let r = count_report(&s, &cfg, 0.0, ps(2000.0)).unwrap();
        assert_eq!(r, CountReport::default());
    }

    #[test]
    fn hand_fixture() {
        let s = fixture(100_000);
        let cfg = CoincidenceConfig::new(ps(40.0), ps(100.0)).unwrap();
        assert_eq!(count_fourfolds(&s, &cfg, 0.0).unwrap(), 1);
        let narrow = CoincidenceConfig::new(ps(8.0), ps(100.0)).unwrap();
        assert_eq!(count_fourfolds(&s, &narrow, 0.0).unwrap(), 0);
        // 3' tag sits 20 ps early: needs tau_23 >= 40 ps
        assert_eq!(count_fourfolds(&s, &CoincidenceConfig::new(ps(40.0), ps(40.0)).unwrap(), 0.0).unwrap(), 1);
        assert_eq!(count_fourfolds(&s, &CoincidenceConfig::new(ps(40.0), ps(39.0)).unwrap(), 0.0).unwrap(), 0);
        // delay moves the channel-4 window
        assert_eq!(count_fourfolds(&s, &cfg, ps(30.0)).unwrap(), 0);
        assert_eq!(count_fourfolds(&s, &cfg, ps(20.0)).unwrap(), 1);
    }

    #[test]
    fn translation_invariant() {
        let cfg = CoincidenceConfig::new(ps(40.0), ps(100.0)).unwrap();
        for off in [20_000, 123_456, 500_000_000] {
            assert_eq!(count_fourfolds(&fixture(off), &cfg, 0.0).unwrap(), 1);
        }
    }

    #[test]
    fn one_count_per_trigger() {
        let mut tags = vec![Tag { channel: 1, timestamp_fs: 1000 }];
        for k in 0..3 {
            for c in [2u8, 3, 4] {
                tags.push(Tag { channel: c, timestamp_fs: 1000 + k });
            }
        }
        tags.sort_by_key(|t| (t.timestamp_fs, t.channel));
        let s = TagStream::new(tags, 1e-9).unwrap();
        let cfg = CoincidenceConfig::new(ps(1.0), ps(1.0)).unwrap();
        assert_eq!(count_fourfolds(&s, &cfg, 0.0).unwrap(), 1);
    }

    #[test]
    fn shift_breaks_fixture_coincidence() {
        let s = fixture(100_000);
        let cfg = CoincidenceConfig::new(ps(40.0), ps(100.0)).unwrap();
        assert_eq!(shifted_accidentals(&s, &cfg, 0.0, ps(1000.0), 2).unwrap(), 0);
        let r = count_report(&s, &cfg, 0.0, ps(1000.0)).unwrap();
        assert_eq!(r, CountReport { raw: 1, shifted_2: 0, shifted_3: 0, corrected: 1 });
    }

    #[test]
    fn shift_preconditions() {
        let s = fixture(100_000);
        let cfg = CoincidenceConfig::new(ps(40.0), ps(100.0)).unwrap();
        assert!(shifted_accidentals(&s, &cfg, 0.0, ps(999.0), 2).is_err());
        assert!(shifted_accidentals(&s, &cfg, 0.0, ps(1000.0), 4).is_err());
    }
}
