//! Load curves and multi-interval market simulation.
//!
//! A [`LoadCurve`] is a timestamped demand series at (typically)
//! quarter-hour resolution; each interval's demand in MW is settled as MWh
//! for that interval. Curves can be loaded from CSV, generated
//! synthetically, and rescaled onto a scenario's demand band with
//! [`scale_load_curve`]. [`simulate_day`](crate::sim::simulate_day) /
//! [`simulate_year`](crate::sim::simulate_year) then clear every interval
//! under each requested mechanism and bidding strategy.

mod metrics;
mod run;

pub use metrics::{average_markup, compare_runs, profit_cost_ratio, ComparisonMetrics};
pub use run::{
    simulate_day, simulate_year, write_intervals_csv, MarketSeries, RunResult, RunSummary,
    SeriesSummary,
};

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeparse;

/// How operators price their offers during a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// Truthful: every unit offers at marginal cost.
    #[serde(rename = "marginal")]
    Marginal,
    /// Learned: each operator applies its trained markup policy.
    #[serde(rename = "policy")]
    Policy,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Marginal => "marginal",
            Strategy::Policy => "policy",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "marginal" => Ok(Strategy::Marginal),
            "policy" => Ok(Strategy::Policy),
            other => Err(Error::InvalidData {
                what: "strategy".into(),
                detail: format!("`{other}` is not marginal or policy"),
            }),
        }
    }
}

/// A demand time series with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadCurve {
    samples: Vec<(NaiveDateTime, f64)>,
    min_mw: f64,
    max_mw: f64,
}

impl LoadCurve {
    pub fn new(samples: Vec<(NaiveDateTime, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput {
                what: "load curve".into(),
            });
        }
        let mut min_mw = f64::INFINITY;
        let mut max_mw = f64::NEG_INFINITY;
        for (row, (ts, demand)) in samples.iter().enumerate() {
            if !demand.is_finite() || *demand < 0.0 {
                return Err(Error::InvalidData {
                    what: "load curve".into(),
                    detail: format!("demand {demand} at {ts} must be finite and >= 0"),
                });
            }
            if row > 0 && samples[row - 1].0 >= *ts {
                return Err(Error::UnorderedCurve { row: row + 1 });
            }
            min_mw = min_mw.min(*demand);
            max_mw = max_mw.max(*demand);
        }
        Ok(Self {
            samples,
            min_mw,
            max_mw,
        })
    }

    pub fn samples(&self) -> &[(NaiveDateTime, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Smallest observed demand (MW).
    pub fn min_mw(&self) -> f64 {
        self.min_mw
    }

    /// Largest observed demand (MW).
    pub fn max_mw(&self) -> f64 {
        self.max_mw
    }
}

/// Linearly maps a curve's demand range onto `[target_min, target_max]`:
/// `y' = (y − min)/(max − min) · (target_max − target_min) + target_min`.
/// The observed extremes land exactly on the targets. Fails on a constant
/// curve (zero observed range).
pub fn scale_load_curve(curve: &LoadCurve, target_min: f64, target_max: f64) -> Result<LoadCurve> {
    if !target_min.is_finite() || !target_max.is_finite() || target_min < 0.0 || target_max < target_min
    {
        return Err(Error::InvalidData {
            what: "scaling targets".into(),
            detail: format!("need 0 <= min <= max, got {target_min}..{target_max}"),
        });
    }
    let (min, max) = (curve.min_mw, curve.max_mw);
    if (max - min).abs() <= f64::EPSILON * max.abs().max(1.0) {
        return Err(Error::ConstantCurve { value: min });
    }
    let scale = (target_max - target_min) / (max - min);
    let samples = curve
        .samples
        .iter()
        .map(|&(ts, y)| (ts, (y - min) * scale + target_min))
        .collect();
    LoadCurve::new(samples)
}

/// Reads a load curve CSV (`timestamp_iso8601,demand_mw`).
pub fn read_load_curve_csv(path: impl AsRef<Path>) -> Result<LoadCurve> {
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
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (Some(c_ts), Some(c_demand)) = (find("timestamp_iso8601"), find("demand_mw")) else {
        return Err(Error::CsvSchema {
            path: Some(display),
            detail: "need columns `timestamp_iso8601` and `demand_mw`".into(),
        });
    };

    let mut samples = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::CsvSchema {
            path: Some(display.clone()),
            detail: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let raw_ts = row.get(c_ts).unwrap_or("").trim();
        let ts = timeparse::parse_iso_naive(raw_ts).ok_or_else(|| Error::InvalidData {
            what: "load curve timestamp".into(),
            detail: format!("line {line}: `{raw_ts}`"),
        })?;
        let raw_demand = row.get(c_demand).unwrap_or("").trim();
        let demand: f64 = raw_demand.parse().map_err(|_| Error::InvalidData {
            what: "load curve demand".into(),
            detail: format!("line {line}: `{raw_demand}`"),
        })?;
        samples.push((ts, demand));
    }
    LoadCurve::new(samples)
}

/// Writes a load curve in the format [`read_load_curve_csv`] reads.
pub fn write_load_curve_csv(path: impl AsRef<Path>, curve: &LoadCurve) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    writer.write_record(["timestamp_iso8601", "demand_mw"])?;
    for (ts, demand) in curve.samples() {
        writer.write_record([
            ts.format(timeparse::ISO_FORMAT).to_string(),
            demand.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Smooth double-peaked daily demand shape in [0, 1]: a morning peak around
/// 09:30, an evening peak around 19:00, a night trough.
fn daily_shape(hour_frac: f64) -> f64 {
    let bump = |center: f64, width: f64| (-((hour_frac - center) / width).powi(2)).exp();
    let raw = 0.22 + 0.55 * bump(9.5, 3.2) + 0.75 * bump(19.0, 3.0);
    raw.min(1.0)
}

fn seasonal_factor(day_of_year: f64) -> f64 {
    // Winter and summer highs (heating / cooling), softer shoulders.
    let phase = day_of_year / 365.25 * std::f64::consts::TAU;
    0.88 + 0.12 * (phase * 2.0).cos().abs() + 0.04 * phase.sin()
}

/// One synthetic day at quarter-hour resolution (96 samples), demands inside
/// `[base_mw, peak_mw]`, with a little seeded noise.
pub fn synthetic_day_curve(
    date: NaiveDate,
    base_mw: f64,
    peak_mw: f64,
    seed: u64,
) -> Result<LoadCurve> {
    synthetic_span(date, date, base_mw, peak_mw, seed)
}

/// A full synthetic year at quarter-hour resolution: 35,040 samples, or
/// 35,136 in a leap year.
pub fn synthetic_year_curve(year: i32, base_mw: f64, peak_mw: f64, seed: u64) -> Result<LoadCurve> {
    let first = NaiveDate::from_ymd_opt(year, 1, 1).ok_or_else(|| Error::InvalidData {
        what: "year".into(),
        detail: format!("{year} out of range"),
    })?;
    let last = NaiveDate::from_ymd_opt(year, 12, 31).expect("dec 31 exists");
    synthetic_span(first, last, base_mw, peak_mw, seed)
}

fn synthetic_span(
    first: NaiveDate,
    last: NaiveDate,
    base_mw: f64,
    peak_mw: f64,
    seed: u64,
) -> Result<LoadCurve> {
    use rand::{Rng, SeedableRng};
    if !base_mw.is_finite() || !peak_mw.is_finite() || base_mw < 0.0 || peak_mw <= base_mw {
        return Err(Error::InvalidData {
            what: "demand bounds".into(),
            detail: format!("need 0 <= base < peak, got {base_mw}..{peak_mw}"),
        });
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    let mut date = first;
    loop {
        let weekday_factor = match date.weekday() {
            chrono::Weekday::Sat => 0.92,
            chrono::Weekday::Sun => 0.86,
            _ => 1.0,
        };
        let season = seasonal_factor(date.ordinal() as f64);
        for quarter in 0..96u32 {
            let ts = date
                .and_hms_opt(quarter / 4, (quarter % 4) * 15, 0)
                .expect("generated time is valid");
            let hour_frac = ts.hour() as f64 + ts.minute() as f64 / 60.0;
            let noise = 1.0 + 0.02 * (rng.random::<f64>() - 0.5);
            let shape = (daily_shape(hour_frac) * weekday_factor * season * noise).clamp(0.0, 1.0);
            samples.push((ts, base_mw + (peak_mw - base_mw) * shape));
        }
        if date == last {
            break;
        }
        date = date.succ_opt().expect("date range is bounded");
    }
    LoadCurve::new(samples)
}
