//! Historical offer data: loading and activity filtering.
//!
//! The history CSV has one row per submitted offer:
//!
//! ```csv
//! timestamp,unit_id,operator_id,price_eur_mwh,quantity_mw
//! 2023-04-07T09:00:00,UP_X,OP_1,62.5,180
//! ```
//!
//! Timestamps are ISO-8601, with or without a UTC offset (offsets are
//! dropped). Columns may appear in any order; extra columns are ignored.
//! Histories come from external systems and are long, so malformed *rows*
//! are collected as diagnostics instead of failing the load — only
//! structural problems (missing columns, nothing usable) are hard errors.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One historical offer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfferRecord {
    pub timestamp: NaiveDateTime,
    pub unit_id: String,
    pub operator_id: String,
    pub price_eur_mwh: f64,
    pub quantity_mw: f64,
}

/// A row the loader refused, with its 1-based line number in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRow {
    pub line: u64,
    pub reason: String,
}

/// Loader output: usable records plus per-row diagnostics.
#[derive(Debug, Clone)]
pub struct OffersLoad {
    pub records: Vec<OfferRecord>,
    pub rejected: Vec<RejectedRow>,
}

const REQUIRED_COLUMNS: [&str; 5] = [
    "timestamp",
    "unit_id",
    "operator_id",
    "price_eur_mwh",
    "quantity_mw",
];

/// Loads an offer history CSV.
pub fn load_offers_csv(path: impl AsRef<Path>) -> Result<OffersLoad> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::CsvSchema {
        path: Some(display.clone()),
        detail: e.to_string(),
    })?;

    let headers = reader
        .headers()
        .map_err(|e| Error::CsvSchema {
            path: Some(display.clone()),
            detail: e.to_string(),
        })?
        .clone();
    let mut column = BTreeMap::new();
    for (idx, header) in headers.iter().enumerate() {
        column.insert(header.trim().to_string(), idx);
    }
    for required in REQUIRED_COLUMNS {
        if !column.contains_key(required) {
            return Err(Error::CsvSchema {
                path: Some(display),
                detail: format!("missing required column `{required}`"),
            });
        }
    }
    let col = |name: &str| column[name];
    let (c_ts, c_unit, c_op, c_price, c_qty) = (
        col("timestamp"),
        col("unit_id"),
        col("operator_id"),
        col("price_eur_mwh"),
        col("quantity_mw"),
    );

    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::CsvSchema {
            path: Some(display.clone()),
            detail: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let mut reject = |reason: String| rejected.push(RejectedRow { line, reason });

        let field = |idx: usize| row.get(idx).unwrap_or("").trim();
        let Some(timestamp) = crate::timeparse::parse_iso_naive(field(c_ts)) else {
            reject(format!("unparseable timestamp `{}`", field(c_ts)));
            continue;
        };
        let unit_id = field(c_unit);
        if unit_id.is_empty() {
            reject("empty unit_id".into());
            continue;
        }
        let Ok(price) = field(c_price).parse::<f64>() else {
            reject(format!("unparseable price `{}`", field(c_price)));
            continue;
        };
        let Ok(quantity) = field(c_qty).parse::<f64>() else {
            reject(format!("unparseable quantity `{}`", field(c_qty)));
            continue;
        };
        if !price.is_finite() || price < 0.0 {
            reject(format!("price {price} out of range"));
            continue;
        }
        if !quantity.is_finite() || quantity < 0.0 {
            reject(format!("quantity {quantity} out of range"));
            continue;
        }
        records.push(OfferRecord {
            timestamp,
            unit_id: unit_id.to_string(),
            operator_id: field(c_op).to_string(),
            price_eur_mwh: price,
            quantity_mw: quantity,
        });
    }

    if records.is_empty() {
        return Err(Error::EmptyInput {
            what: format!("offer history {display} (no usable rows)"),
        });
    }
    Ok(OffersLoad { records, rejected })
}

/// Writes an offer history in the format [`load_offers_csv`] reads.
pub fn write_offers_csv(path: impl AsRef<Path>, records: &[OfferRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    writer.write_record(REQUIRED_COLUMNS)?;
    for r in records {
        writer.write_record([
            r.timestamp.format(crate::timeparse::ISO_FORMAT).to_string(),
            r.unit_id.clone(),
            r.operator_id.clone(),
            r.price_eur_mwh.to_string(),
            r.quantity_mw.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// What the activity filter did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityFilter {
    /// Units needed at least this many offers to survive.
    pub threshold_count: u64,
    pub removed_units: Vec<String>,
    pub kept_units: usize,
}

/// Drops units whose offer count falls below the `percentile` of per-unit
/// offer counts (nearest-rank: the threshold is the count at rank
/// `ceil(percentile * number_of_units)`, so units strictly below it go).
/// Returns the surviving records and a report of what was removed.
pub fn filter_low_activity_units(
    records: &[OfferRecord],
    percentile: f64,
) -> Result<(Vec<OfferRecord>, ActivityFilter)> {
    if records.is_empty() {
        return Err(Error::EmptyInput {
            what: "offer history".into(),
        });
    }
    if !(0.0..=1.0).contains(&percentile) || !percentile.is_finite() {
        return Err(Error::InvalidData {
            what: "activity percentile".into(),
            detail: format!("{percentile} must be in [0, 1]"),
        });
    }

    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for r in records {
        *counts.entry(r.unit_id.as_str()).or_insert(0) += 1;
    }

    let threshold_count = if percentile == 0.0 {
        0
    } else {
        let mut sorted: Vec<u64> = counts.values().copied().collect();
        sorted.sort_unstable();
        let rank = ((percentile * sorted.len() as f64).ceil() as usize).max(1);
        sorted[rank - 1]
    };

    let removed_units: Vec<String> = counts
        .iter()
        .filter(|(_, &c)| c < threshold_count)
        .map(|(id, _)| id.to_string())
        .collect();
    let kept: Vec<OfferRecord> = records
        .iter()
        .filter(|r| counts[r.unit_id.as_str()] >= threshold_count)
        .cloned()
        .collect();
    let report = ActivityFilter {
        threshold_count,
        kept_units: counts.len() - removed_units.len(),
        removed_units,
    };
    Ok((kept, report))
}
