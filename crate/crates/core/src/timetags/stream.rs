use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::units::FEMTOSECOND;
use crate::{Error, Result};

/// Seconds to the nearest integer femtosecond.
pub fn seconds_to_fs(t: f64) -> i64 {
    (t / FEMTOSECOND).round() as i64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Tag {
    /// 1..=4
    pub channel: u8,
    pub timestamp_fs: i64,
}

/// Tags sorted by timestamp, all within `[0, duration]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TagStream {
    tags: Vec<Tag>,
    duration: f64,
}

impl TagStream {
    pub fn new(tags: Vec<Tag>, duration: f64) -> Result<Self> {
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(Error::invalid("stream duration must be >= 0"));
        }
        let end = seconds_to_fs(duration);
        for (i, t) in tags.iter().enumerate() {
            if !(1..=4).contains(&t.channel) {
                return Err(Error::invalid(format!("tag {i} has channel {} outside 1..=4", t.channel)));
            }
            if t.timestamp_fs < 0 || t.timestamp_fs > end {
                return Err(Error::invalid(format!("tag {i} timestamp outside [0, duration]")));
            }
            if i > 0 && t.timestamp_fs < tags[i - 1].timestamp_fs {
                return Err(Error::Unsorted(i));
            }
        }
        Ok(TagStream { tags, duration })
    }

    pub fn empty(duration: f64) -> Result<Self> {
        Self::new(Vec::new(), duration)
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    /// [s]
    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn duration_fs(&self) -> i64 {
        seconds_to_fs(self.duration)
    }

    /// Sorted timestamps of one channel.
    pub fn channel_times(&self, channel: u8) -> Vec<i64> {
        self.tags.iter().filter(|t| t.channel == channel).map(|t| t.timestamp_fs).collect()
    }

    pub fn count_in(&self, channel: u8) -> usize {
        self.tags.iter().filter(|t| t.channel == channel).count()
    }

    /// `channel,timestamp_fs`
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["channel", "timestamp_fs"])?;
        for t in &self.tags {
            w.write_record([t.channel.to_string(), t.timestamp_fs.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `channel,timestamp_fs`. Without an explicit duration the stream
    /// ends at its last tag.
    pub fn read_csv(input: impl Read, duration: Option<f64>) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["channel", "timestamp_fs"] {
            return Err(Error::invalid("tag file header must be `channel,timestamp_fs`"));
        }
        let mut tags = Vec::new();
        for rec in r.deserialize() {
            let tag: Tag = rec?;
            tags.push(tag);
        }
        let duration = duration.unwrap_or_else(|| tags.last().map_or(0.0, |t| t.timestamp_fs as f64 * FEMTOSECOND));
        Self::new(tags, duration)
    }
}
