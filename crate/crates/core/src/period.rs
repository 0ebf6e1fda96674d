//! Observation periods: calendar years and mid-year-to-mid-year intervals.
//!
//! Administrative sources publish on different clocks — GP registrations by
//! calendar year, national insurance registrations and the official
//! migration estimates by mid-year interval. The two kinds are never mixed
//! silently: a period is comparable only with periods of the same kind, and
//! every output that crosses kinds labels each series.

use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Earliest supported start year.
pub const MIN_YEAR: i32 = 1990;
/// Latest supported start year.
pub const MAX_YEAR: i32 = 2100;

#[derive(Debug, Error)]
pub enum PeriodError {
    #[error("unparseable period `{0}`: expected `YYYY` or `YYYY/YY`")]
    Format(String),
    #[error("period start year {0} outside supported range {MIN_YEAR}..={MAX_YEAR}")]
    YearOutOfRange(i32),
    #[error("mid-year interval `{0}` must span consecutive years")]
    SpanMismatch(String),
}

/// The two period clocks used by the source catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodKind {
    CalendarYear,
    MidYearInterval,
}

impl PeriodKind {
    /// Human label used in table headers.
    pub fn label(self) -> &'static str {
        match self {
            PeriodKind::CalendarYear => "calendar years",
            PeriodKind::MidYearInterval => "mid-year intervals",
        }
    }
}

impl fmt::Display for PeriodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PeriodKind::CalendarYear => write!(f, "calendar"),
            PeriodKind::MidYearInterval => write!(f, "mid-year"),
        }
    }
}

impl FromStr for PeriodKind {
    type Err = PeriodError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "calendar" | "calendar_year" | "calendar-year" => Ok(PeriodKind::CalendarYear),
            "mid-year" | "midyear" | "mid_year" | "mid_year_interval" | "mid-year-interval" => {
                Ok(PeriodKind::MidYearInterval)
            }
            _ => Err(PeriodError::Format(s.to_string())),
        }
    }
}

/// A single observation period: either one calendar year, or the interval
/// from mid-year of `start_year` to mid-year of `start_year + 1`.
///
/// Rendered `2006` for calendar years and `2006/07` for mid-year intervals;
/// that text form is the wire format in every CSV and JSON file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObservationPeriod {
    kind: PeriodKind,
    start_year: i32,
}

impl ObservationPeriod {
    pub fn calendar(year: i32) -> Result<Self, PeriodError> {
        Self::new(PeriodKind::CalendarYear, year)
    }

    pub fn mid_year(start_year: i32) -> Result<Self, PeriodError> {
        Self::new(PeriodKind::MidYearInterval, start_year)
    }

    pub fn new(kind: PeriodKind, start_year: i32) -> Result<Self, PeriodError> {
        if !(MIN_YEAR..=MAX_YEAR).contains(&start_year) {
            return Err(PeriodError::YearOutOfRange(start_year));
        }
        Ok(ObservationPeriod { kind, start_year })
    }

    pub fn kind(self) -> PeriodKind {
        self.kind
    }

    pub fn start_year(self) -> i32 {
        self.start_year
    }

    /// Two periods are comparable only when their kinds match.
    pub fn comparable_with(self, other: ObservationPeriod) -> bool {
        self.kind == other.kind
    }
}

impl fmt::Display for ObservationPeriod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PeriodKind::CalendarYear => write!(f, "{}", self.start_year),
            PeriodKind::MidYearInterval => {
                write!(f, "{}/{:02}", self.start_year, (self.start_year + 1).rem_euclid(100))
            }
        }
    }
}

impl FromStr for ObservationPeriod {
    type Err = PeriodError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some((first, second)) = s.split_once('/') {
            let start: i32 = first
                .parse()
                .map_err(|_| PeriodError::Format(s.to_string()))?;
            let end: i32 = second
                .parse()
                .map_err(|_| PeriodError::Format(s.to_string()))?;
            if second.len() != 2 || end != (start + 1).rem_euclid(100) {
                return Err(PeriodError::SpanMismatch(s.to_string()));
            }
            ObservationPeriod::mid_year(start)
        } else {
            let year: i32 = s.parse().map_err(|_| PeriodError::Format(s.to_string()))?;
            ObservationPeriod::calendar(year)
        }
    }
}

// Serialized as the display string so JSON provenance stays readable.
impl Serialize for ObservationPeriod {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ObservationPeriod {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(D::Error::custom)
    }
}
