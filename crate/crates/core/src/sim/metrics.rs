//! Comparison metrics between a strategic run and its truthful baseline.

use serde::{Deserialize, Serialize};

use super::run::MarketSeries;
use crate::error::{Error, Result};

/// Relative change of the strategic run against the truthful baseline of
/// the same mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonMetrics {
    /// Interval-wise PUN change in percent; `None` where the baseline PUN
    /// is zero (nothing dispatched at a price, so a ratio is undefined).
    pub delta_pun_pct: Vec<Option<f64>>,
    /// Number of intervals excluded from the PUN statistics by a zero
    /// baseline.
    pub excluded_intervals: usize,
    pub mean_delta_pun_pct: Option<f64>,
    pub min_delta_pun_pct: Option<f64>,
    pub max_delta_pun_pct: Option<f64>,
    /// Whole-run buyer expenditure change in percent.
    pub delta_cost_pct: Option<f64>,
    /// Whole-run producer profit change in percent.
    pub delta_profit_pct: Option<f64>,
    /// Markup earned by producers in the strategic run, in percent.
    pub markup_pct: Option<f64>,
    /// Profit per euro of buyer expenditure in the strategic run, percent.
    pub profit_cost_pct: Option<f64>,
}

/// Producer markup over true cost: profit / (expenditure − profit) × 100.
///
/// The denominator is what producers would have been paid at cost, so the
/// expenditure must exceed the profit for the number to mean anything.
pub fn average_markup(total_cost: f64, total_profit: f64) -> Result<f64> {
    if !(total_cost.is_finite() && total_profit.is_finite()) || total_cost <= total_profit {
        return Err(Error::InvalidEconomics {
            profit: total_profit,
            cost: total_cost,
        });
    }
    Ok(total_profit / (total_cost - total_profit) * 100.0)
}

/// Producer profit per euro of buyer expenditure, in percent.
pub fn profit_cost_ratio(total_cost: f64, total_profit: f64) -> Result<f64> {
    if !(total_cost.is_finite() && total_profit.is_finite()) {
        return Err(Error::InvalidEconomics {
            profit: total_profit,
            cost: total_cost,
        });
    }
    if total_cost <= 0.0 {
        return Err(Error::ZeroCost);
    }
    Ok(total_profit / total_cost * 100.0)
}

fn pct_change(baseline: f64, strategic: f64) -> Option<f64> {
    if baseline == 0.0 {
        None
    } else {
        Some((strategic - baseline) / baseline * 100.0)
    }
}

/// Compares a series against a baseline interval by interval. The two may
/// differ in mechanism (segmented vs uniform clearing of the same curve) or
/// in strategy (policy vs marginal offers) — the only requirement is the
/// same interval grid, checked by length.
pub fn compare_runs(baseline: &MarketSeries, strategic: &MarketSeries) -> Result<ComparisonMetrics> {
    if baseline.len() != strategic.len() {
        return Err(Error::SeriesMismatch {
            left: baseline.len(),
            right: strategic.len(),
        });
    }
    if baseline.is_empty() {
        return Err(Error::EmptyInput {
            what: "comparison series".into(),
        });
    }

    let delta_pun_pct: Vec<Option<f64>> = baseline
        .pun
        .iter()
        .zip(&strategic.pun)
        .map(|(&b, &s)| pct_change(b, s))
        .collect();
    let included: Vec<f64> = delta_pun_pct.iter().filter_map(|d| *d).collect();
    let excluded_intervals = delta_pun_pct.len() - included.len();

    let (mean, min, max) = if included.is_empty() {
        (None, None, None)
    } else {
        let mean = included.iter().sum::<f64>() / included.len() as f64;
        let min = included.iter().copied().fold(f64::INFINITY, f64::min);
        let max = included.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (Some(mean), Some(min), Some(max))
    };

    Ok(ComparisonMetrics {
        delta_pun_pct,
        excluded_intervals,
        mean_delta_pun_pct: mean,
        min_delta_pun_pct: min,
        max_delta_pun_pct: max,
        delta_cost_pct: pct_change(baseline.total_cost(), strategic.total_cost()),
        delta_profit_pct: pct_change(baseline.total_profit(), strategic.total_profit()),
        markup_pct: average_markup(strategic.total_cost(), strategic.total_profit()).ok(),
        profit_cost_pct: profit_cost_ratio(strategic.total_cost(), strategic.total_profit()).ok(),
    })
}
