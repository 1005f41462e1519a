use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use super::CorpusError;

pub const SECONDS_PER_WEEK: i64 = 604_800;

/// Width of one time bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Week,
    Month,
    Year,
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Week => "week",
            Granularity::Month => "month",
            Granularity::Year => "year",
        })
    }
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "week" | "weekly" => Ok(Granularity::Week),
            "month" | "monthly" => Ok(Granularity::Month),
            "year" | "yearly" => Ok(Granularity::Year),
            other => Err(format!("unknown granularity '{other}' (expected week, month or year)")),
        }
    }
}

fn utc(ts: i64) -> Result<DateTime<Utc>, CorpusError> {
    DateTime::from_timestamp(ts, 0).ok_or(CorpusError::TimestampOutOfRange(ts))
}

/// Maps a timestamp to its bucket index relative to `epoch`.
///
/// Weeks are counted from the epoch itself, not from calendar week
/// boundaries. Months and years are calendar offsets from the epoch's
/// month or year.
pub fn time_bucket(timestamp: i64, granularity: Granularity, epoch: i64) -> Result<u32, CorpusError> {
    if timestamp < epoch {
        return Err(CorpusError::BeforeEpoch { timestamp, epoch });
    }
    let offset = match granularity {
        Granularity::Week => (timestamp - epoch) / SECONDS_PER_WEEK,
        Granularity::Month => {
            let (t, e) = (utc(timestamp)?, utc(epoch)?);
            (t.year() as i64 - e.year() as i64) * 12 + (t.month() as i64 - e.month() as i64)
        }
        Granularity::Year => {
            let (t, e) = (utc(timestamp)?, utc(epoch)?);
            t.year() as i64 - e.year() as i64
        }
    };
    u32::try_from(offset).map_err(|_| CorpusError::TimestampOutOfRange(timestamp))
}

/// Parses an ISO-8601 date or date-time string into epoch seconds (UTC).
///
/// Accepts `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM:SS` (naive, read as UTC) and
/// RFC 3339 with an offset.
pub fn parse_iso8601(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|dt| dt.and_utc().timestamp())
}

/// Parses either integer epoch seconds or an ISO-8601 string.
pub fn parse_timestamp(s: &str) -> Option<i64> {
    s.trim().parse::<i64>().ok().or_else(|| parse_iso8601(s))
}

/// First calendar day covered by `bucket`.
pub fn bucket_start_date(bucket: u32, granularity: Granularity, epoch: i64) -> Option<NaiveDate> {
    let start = DateTime::from_timestamp(epoch, 0)?;
    match granularity {
        Granularity::Week => {
            DateTime::from_timestamp(epoch + bucket as i64 * SECONDS_PER_WEEK, 0).map(|d| d.date_naive())
        }
        Granularity::Month => {
            let months = start.month0() as i64 + bucket as i64;
            let year = start.year() as i64 + months / 12;
            NaiveDate::from_ymd_opt(i32::try_from(year).ok()?, (months % 12) as u32 + 1, 1)
        }
        Granularity::Year => NaiveDate::from_ymd_opt(start.year().checked_add(i32::try_from(bucket).ok()?)?, 1, 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(s: &str) -> i64 {
        parse_iso8601(s).unwrap()
    }

    #[test]
    fn origin_is_bucket_zero() {
        for g in [Granularity::Week, Granularity::Month, Granularity::Year] {
            assert_eq!(time_bucket(1_000_000, g, 1_000_000).unwrap(), 0);
        }
    }

    #[test]
    fn week_floor_rule() {
        let epoch = 1_000_000;
        assert_eq!(
            time_bucket(epoch + SECONDS_PER_WEEK * 3 + 1, Granularity::Week, epoch).unwrap(),
            3
        );
        assert_eq!(
            time_bucket(epoch + SECONDS_PER_WEEK - 1, Granularity::Week, epoch).unwrap(),
            0
        );
    }

    #[test]
    fn calendar_offsets() {
        let epoch = date("2001-01-15");
        assert_eq!(time_bucket(date("2003-02-01"), Granularity::Year, epoch).unwrap(), 2);
        assert_eq!(time_bucket(date("2003-02-01"), Granularity::Month, epoch).unwrap(), 25);
        assert_eq!(time_bucket(date("2001-01-31"), Granularity::Month, epoch).unwrap(), 0);
        assert_eq!(time_bucket(date("2001-02-01"), Granularity::Month, epoch).unwrap(), 1);
    }

    #[test]
    fn before_epoch_is_an_error() {
        assert!(matches!(
            time_bucket(5, Granularity::Week, 10),
            Err(CorpusError::BeforeEpoch {
                timestamp: 5,
                epoch: 10
            })
        ));
    }

    #[test]
    fn timestamp_formats() {
        assert_eq!(parse_timestamp("86400"), Some(86_400));
        assert_eq!(parse_timestamp("1970-01-02"), Some(86_400));
        assert_eq!(parse_timestamp("1970-01-02T00:00:10"), Some(86_410));
        assert_eq!(parse_timestamp("1970-01-02T01:00:00+01:00"), Some(86_400));
        assert_eq!(parse_timestamp("yesterday"), None);
    }

    #[test]
    fn bucket_dates() {
        let epoch = parse_iso8601("2011-11-20").unwrap();
        let d = |b, g| bucket_start_date(b, g, epoch).unwrap().to_string();
        assert_eq!(d(2, Granularity::Week), "2011-12-04");
        assert_eq!(d(2, Granularity::Month), "2012-01-01");
        assert_eq!(d(1, Granularity::Year), "2012-01-01");
    }
}
