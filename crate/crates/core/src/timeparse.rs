//! Timestamp parsing shared by the CSV loaders.

use chrono::NaiveDateTime;

/// Format used when writing timestamps.
pub(crate) const ISO_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// Accepts ISO-8601 date-times with or without a UTC offset (and with a
/// space instead of `T`); offsets are normalised to UTC and dropped.
pub(crate) fn parse_iso_naive(raw: &str) -> Option<NaiveDateTime> {
    if let Ok(t) = NaiveDateTime::parse_from_str(raw, ISO_FORMAT) {
        return Some(t);
    }
    if let Ok(t) = NaiveDateTime::parse_from_str(raw, "%Y-%m-%d %H:%M:%S") {
        return Some(t);
    }
    chrono::DateTime::parse_from_rfc3339(raw)
        .ok()
        .map(|t| t.naive_utc())
}
