//! MS-DOS date/time as stored in ZIP headers (2-second resolution).

use std::fmt;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

/// Packed DOS date and time fields, exactly as they appear on disk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DosDateTime {
    pub date: u16,
    pub time: u16,
}

impl DosDateTime {
    /// 1980-01-01T00:00:00, the smallest representable value.
    pub const MIN: DosDateTime = DosDateTime { date: (1 << 5) | 1, time: 0 };

    pub fn from_parts(year: u16, month: u8, day: u8, hour: u8, minute: u8, second: u8) -> Self {
        let year = year.clamp(1980, 2107);
        let date = ((year - 1980) << 9) | ((month as u16 & 0x0f) << 5) | (day as u16 & 0x1f);
        let time = ((hour as u16 & 0x1f) << 11) | ((minute as u16 & 0x3f) << 5) | ((second as u16 / 2) & 0x1f);
        DosDateTime { date, time }
    }

    /// Converts a calendar time, clamping into the representable 1980..=2107 range.
    pub fn from_naive(t: &NaiveDateTime) -> Self {
        if t.year() < 1980 {
            return Self::MIN;
        }
        if t.year() > 2107 {
            return Self::from_parts(2107, 12, 31, 23, 59, 58);
        }
        Self::from_parts(t.year() as u16, t.month() as u8, t.day() as u8, t.hour() as u8, t.minute() as u8, t.second() as u8)
    }

    pub fn from_unix_seconds(secs: i64) -> Self {
        match chrono::DateTime::from_timestamp(secs, 0) {
            Some(dt) => Self::from_naive(&dt.naive_utc()),
            None if secs < 0 => Self::MIN,
            None => Self::from_parts(2107, 12, 31, 23, 59, 58),
        }
    }

    /// Seconds since the Unix epoch, reading the fields as UTC. Invalid
    /// packed dates fall back to 1980-01-01.
    pub fn to_unix_seconds(&self) -> i64 {
        NaiveDate::from_ymd_opt(self.year() as i32, self.month() as u32, self.day() as u32)
            .and_then(|d| d.and_hms_opt(self.hour() as u32, self.minute() as u32, self.second() as u32))
            .unwrap_or_else(|| NaiveDate::from_ymd_opt(1980, 1, 1).and_then(|d| d.and_hms_opt(0, 0, 0)).expect("valid"))
            .and_utc()
            .timestamp()
    }

    /// Parses either a decimal epoch value or an ISO-8601 date/time
    /// (`2021-09-18T22:43:23`, optional `Z` or offset, or a bare date).
    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        if let Ok(secs) = text.parse::<i64>() {
            return Some(Self::from_unix_seconds(secs));
        }
        if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(text) {
            return Some(Self::from_naive(&dt.naive_utc()));
        }
        for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
            if let Ok(dt) = NaiveDateTime::parse_from_str(text, fmt) {
                return Some(Self::from_naive(&dt));
            }
        }
        NaiveDate::parse_from_str(text, "%Y-%m-%d").ok().and_then(|d| d.and_hms_opt(0, 0, 0)).map(|dt| Self::from_naive(&dt))
    }

    pub fn year(&self) -> u16 {
        1980 + (self.date >> 9)
    }
    pub fn month(&self) -> u8 {
        ((self.date >> 5) & 0x0f) as u8
    }
    pub fn day(&self) -> u8 {
        (self.date & 0x1f) as u8
    }
    pub fn hour(&self) -> u8 {
        (self.time >> 11) as u8
    }
    pub fn minute(&self) -> u8 {
        ((self.time >> 5) & 0x3f) as u8
    }
    pub fn second(&self) -> u8 {
        ((self.time & 0x1f) * 2) as u8
    }
}

impl Default for DosDateTime {
    fn default() -> Self {
        Self::MIN
    }
}

impl fmt::Display for DosDateTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}T{:02}:{:02}:{:02}", self.year(), self.month(), self.day(), self.hour(), self.minute(), self.second())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_is_1980_01_01() {
        assert_eq!(DosDateTime::MIN.to_string(), "1980-01-01T00:00:00");
        assert_eq!(DosDateTime::parse("1980-01-01T00:00:00"), Some(DosDateTime::MIN));
        assert_eq!(DosDateTime::parse("0"), Some(DosDateTime::MIN));
    }

    #[test]
    fn two_second_resolution() {
        let t = DosDateTime::parse("2021-09-18T22:43:23").unwrap();
        assert_eq!(t.to_string(), "2021-09-18T22:43:22");
    }

    #[test]
    fn epoch_and_rfc3339_agree() {
        let a = DosDateTime::parse("1632005003").unwrap();
        let b = DosDateTime::parse("2021-09-18T22:43:23Z").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn out_of_range_clamps() {
        assert_eq!(DosDateTime::parse("1970-01-01"), Some(DosDateTime::MIN));
        assert_eq!(DosDateTime::parse("2200-01-01").unwrap().year(), 2107);
        assert!(DosDateTime::parse("yesterday").is_none());
    }
}
