//! Per-unit behavioural features extracted from an offer history.
//!
//! Eight numbers summarise how a unit offers: price level, size, quantity
//! variability (overall, across hours of day, across months), flexibility,
//! and when in the day it shows up. All standard deviations here are
//! *population* deviations (divide by N, not N−1) — the history is treated
//! as the whole population of the unit's behaviour, not a sample.

use std::collections::BTreeMap;

use chrono::{Datelike, Timelike};
use serde::{Deserialize, Serialize};

use super::offers::OfferRecord;
use crate::error::{Error, Result};

/// Feature vector of one production unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitFeatures {
    /// Quantity-weighted mean offer price (€/MWh).
    pub p_w: f64,
    /// Largest offered quantity (MW).
    pub q_max: f64,
    /// Coefficient of variation of offered quantity: σ(Q)/μ(Q).
    pub cv: f64,
    /// Quantity flexibility: (max − min) / max.
    pub flex_q: f64,
    /// Std of the 24 hour-of-day mean quantities (empty hours excluded).
    pub v_h: f64,
    /// Std of the 12 month mean quantities (empty months excluded).
    pub v_m: f64,
    /// Share of offers submitted between 22:00 and 06:00, in percent.
    pub h_night: f64,
    /// Share of offers submitted 09:00–12:00 or 18:00–20:00, in percent.
    pub h_peak: f64,
}

impl UnitFeatures {
    pub const NAMES: [&'static str; 8] = [
        "p_w", "q_max", "cv", "flex_q", "v_h", "v_m", "h_night", "h_peak",
    ];

    pub fn to_row(&self) -> Vec<f64> {
        vec![
            self.p_w,
            self.q_max,
            self.cv,
            self.flex_q,
            self.v_h,
            self.v_m,
            self.h_night,
            self.h_peak,
        ]
    }
}

/// A unit ready for clustering: its features plus the two quantities the
/// portfolio builder needs later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitProfile {
    pub unit_id: String,
    pub operator_id: String,
    pub features: UnitFeatures,
    /// Mean offered quantity (MW) — becomes the portfolio capacity.
    pub q_mean: f64,
    pub n_offers: usize,
}

fn population_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt()
}

fn is_night(hour: u32) -> bool {
    !(6..22).contains(&hour)
}

fn is_peak(hour: u32) -> bool {
    (9..12).contains(&hour) || (18..20).contains(&hour)
}

/// Computes the feature vector from one unit's offer records.
///
/// Fails when the records are empty or every offered quantity is zero (the
/// weighted price and the variation coefficient are undefined then).
pub fn compute_unit_features(records: &[OfferRecord]) -> Result<UnitFeatures> {
    let unit_id = records
        .first()
        .map(|r| r.unit_id.clone())
        .ok_or(Error::EmptyInput {
            what: "unit offer records".into(),
        })?;

    let n = records.len() as f64;
    let quantities: Vec<f64> = records.iter().map(|r| r.quantity_mw).collect();
    let total_q: f64 = quantities.iter().sum();
    if total_q <= 0.0 {
        return Err(Error::DegenerateFeatures {
            unit_id,
            reason: "all offered quantities are zero".into(),
        });
    }

    let p_w = records
        .iter()
        .map(|r| r.price_eur_mwh * r.quantity_mw)
        .sum::<f64>()
        / total_q;
    let q_mean = total_q / n;
    let q_max = quantities.iter().cloned().fold(f64::MIN, f64::max);
    let q_min = quantities.iter().cloned().fold(f64::MAX, f64::min);
    let cv = population_std(&quantities) / q_mean;
    let flex_q = (q_max - q_min) / q_max;

    let mut by_hour: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    let mut by_month: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    let mut night = 0usize;
    let mut peak = 0usize;
    for r in records {
        let hour = r.timestamp.hour();
        by_hour.entry(hour).or_default().push(r.quantity_mw);
        by_month
            .entry(r.timestamp.month())
            .or_default()
            .push(r.quantity_mw);
        night += is_night(hour) as usize;
        peak += is_peak(hour) as usize;
    }
    let hour_means: Vec<f64> = by_hour
        .values()
        .map(|qs| qs.iter().sum::<f64>() / qs.len() as f64)
        .collect();
    let month_means: Vec<f64> = by_month
        .values()
        .map(|qs| qs.iter().sum::<f64>() / qs.len() as f64)
        .collect();

    Ok(UnitFeatures {
        p_w,
        q_max,
        cv,
        flex_q,
        v_h: population_std(&hour_means),
        v_m: population_std(&month_means),
        h_night: 100.0 * night as f64 / n,
        h_peak: 100.0 * peak as f64 / n,
    })
}

/// Groups records by unit and computes every unit's profile.
///
/// Units with degenerate histories (all-zero quantities) are skipped and
/// returned by id so callers can surface a warning; anything else that fails
/// is a real error.
pub fn build_unit_profiles(records: &[OfferRecord]) -> Result<(Vec<UnitProfile>, Vec<String>)> {
    if records.is_empty() {
        return Err(Error::EmptyInput {
            what: "offer history".into(),
        });
    }
    let mut grouped: BTreeMap<&str, Vec<OfferRecord>> = BTreeMap::new();
    for r in records {
        grouped.entry(r.unit_id.as_str()).or_default().push(r.clone());
    }

    let mut profiles = Vec::with_capacity(grouped.len());
    let mut skipped = Vec::new();
    for (unit_id, unit_records) in grouped {
        match compute_unit_features(&unit_records) {
            Ok(features) => {
                let total_q: f64 = unit_records.iter().map(|r| r.quantity_mw).sum();
                profiles.push(UnitProfile {
                    unit_id: unit_id.to_string(),
                    operator_id: unit_records[0].operator_id.clone(),
                    features,
                    q_mean: total_q / unit_records.len() as f64,
                    n_offers: unit_records.len(),
                });
            }
            Err(Error::DegenerateFeatures { unit_id, .. }) => skipped.push(unit_id),
            Err(other) => return Err(other),
        }
    }
    if profiles.is_empty() {
        return Err(Error::EmptyInput {
            what: "unit profiles (every unit was degenerate)".into(),
        });
    }
    Ok((profiles, skipped))
}

/// Feature matrix of a profile list, row order preserved.
pub fn feature_matrix(profiles: &[UnitProfile]) -> Vec<Vec<f64>> {
    profiles.iter().map(|p| p.features.to_row()).collect()
}

/// Column-wise z-score normalization result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScore {
    pub matrix: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Columns whose values were all equal: normalized to zero rather than
    /// dividing by a zero deviation. Worth a warning — the feature carries
    /// no information for this data set.
    pub constant_columns: Vec<usize>,
}

/// Normalizes each column to zero mean and unit (population) deviation.
pub fn zscore_normalize(matrix: &[Vec<f64>]) -> Result<ZScore> {
    if matrix.len() < 2 {
        return Err(Error::InvalidData {
            what: "feature matrix".into(),
            detail: format!("need at least 2 rows, got {}", matrix.len()),
        });
    }
    let width = matrix[0].len();
    if width == 0 || matrix.iter().any(|row| row.len() != width) {
        return Err(Error::InvalidData {
            what: "feature matrix".into(),
            detail: "rows are empty or ragged".into(),
        });
    }
    for (i, row) in matrix.iter().enumerate() {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData {
                what: "feature matrix".into(),
                detail: format!("non-finite value in row {i}"),
            });
        }
    }

    let n = matrix.len() as f64;
    let mut means = vec![0.0; width];
    let mut stds = vec![0.0; width];
    for col in 0..width {
        let mean = matrix.iter().map(|r| r[col]).sum::<f64>() / n;
        let var = matrix.iter().map(|r| (r[col] - mean).powi(2)).sum::<f64>() / n;
        means[col] = mean;
        stds[col] = var.sqrt();
    }

    let mut constant_columns = Vec::new();
    let mut out = vec![vec![0.0; width]; matrix.len()];
    for col in 0..width {
        if stds[col] <= f64::EPSILON * means[col].abs().max(1.0) {
            constant_columns.push(col);
            continue; // leave the whole column at 0
        }
        for (row_out, row_in) in out.iter_mut().zip(matrix) {
            row_out[col] = (row_in[col] - means[col]) / stds[col];
        }
    }
    Ok(ZScore {
        matrix: out,
        means,
        stds,
        constant_columns,
    })
}
