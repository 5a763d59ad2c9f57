//! Synthetic offer histories for demos, fixtures, and pipeline tests.
//!
//! Five production archetypes with deliberately distinct offering behaviour
//! — price level, unit size, active hours, quantity variability,
//! seasonality — so the feature/clustering pipeline has a ground truth to
//! rediscover. Unit ids embed the archetype (`solar-03`), which is what
//! tests use to check cluster purity. A configurable number of barely-active
//! units is mixed in for the activity filter to remove.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::offers::OfferRecord;

pub const ARCHETYPES: [&str; 5] = ["solar", "wind", "hydro", "gas", "coal"];

/// Knobs for the generator. Defaults give 60 active units (12 per archetype)
/// plus 14 sparse ones — sized so a 20th-percentile activity filter removes
/// exactly the sparse tail.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub units_per_archetype: usize,
    pub sparse_units: usize,
    pub year: i32,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            seed: 2030,
            units_per_archetype: 12,
            sparse_units: 14,
            year: 2023,
        }
    }
}

/// Archetype a generated unit id belongs to, if it is one of ours.
pub fn archetype_of_unit(unit_id: &str) -> Option<&'static str> {
    ARCHETYPES
        .iter()
        .find(|a| unit_id.starts_with(&format!("{a}-")))
        .copied()
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Nameplate range (MW) per archetype. Unit size tracks technology — utility
/// solar parks are an order of magnitude smaller than thermal plants — and
/// that correlation is part of the behavioural fingerprint: three of the
/// clustering features (`q_max`, `v_h`, `v_m`) are measured in MW, so they
/// only separate archetypes when size does too.
fn capacity_band(archetype: &str) -> (f64, f64) {
    match archetype {
        "solar" => (45.0, 75.0),
        "wind" => (90.0, 140.0),
        "hydro" => (160.0, 220.0),
        "gas" => (260.0, 340.0),
        "coal" => (360.0, 440.0),
        other => unreachable!("unknown archetype {other}"),
    }
}

/// Generates the full history, ordered by unit then time.
pub fn synthetic_offer_history(spec: &SyntheticSpec) -> Vec<OfferRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut records = Vec::new();
    let days = [2u32, 9, 16, 23];

    for (arch_idx, archetype) in ARCHETYPES.iter().enumerate() {
        for unit_idx in 0..spec.units_per_archetype {
            let unit_id = format!("{archetype}-{unit_idx:02}");
            let operator_id = format!("GENCO_{}", (arch_idx * spec.units_per_archetype + unit_idx) % 3 + 1);
            let (cap_lo, cap_hi) = capacity_band(archetype);
            let q_max = uniform(&mut rng, cap_lo, cap_hi);

            for month in 1..=12u32 {
                for &day in &days {
                    emit_unit_day(
                        &mut rng,
                        &mut records,
                        archetype,
                        &unit_id,
                        &operator_id,
                        spec.year,
                        month,
                        day,
                        q_max,
                    );
                }
            }
        }
    }

    // Sparse tail: a handful of offers each, behaviour borrowed from a
    // rotating archetype.
    for i in 0..spec.sparse_units {
        let archetype = ARCHETYPES[i % ARCHETYPES.len()];
        let unit_id = format!("sparse-{i:02}");
        let operator_id = format!("GENCO_{}", i % 3 + 1);
        let (cap_lo, cap_hi) = capacity_band(archetype);
        let q_max = uniform(&mut rng, cap_lo, cap_hi);
        let n_offers = 3 + (i % 6) as u32;
        for k in 0..n_offers {
            let month = 1 + (k * 2) % 12;
            let day = days[(k as usize) % days.len()];
            // One offer per visited day is enough for the sparse tail; the
            // generator still consumes the day's full random draw, which
            // keeps the stream layout independent of the truncation.
            let mut day_offers = Vec::new();
            emit_unit_day(
                &mut rng,
                &mut day_offers,
                archetype,
                &unit_id,
                &operator_id,
                spec.year,
                month,
                day,
                q_max,
            );
            day_offers.truncate(1);
            records.extend(day_offers);
        }
    }
    records
}

#[allow(clippy::too_many_arguments)]
fn emit_unit_day(
    rng: &mut ChaCha8Rng,
    records: &mut Vec<OfferRecord>,
    archetype: &str,
    unit_id: &str,
    operator_id: &str,
    year: i32,
    month: u32,
    day: u32,
    q_max: f64,
) {
    let date = NaiveDate::from_ymd_opt(year, month, day).expect("generator dates are valid");
    let mut push = |hour: u32, price: f64, quantity: f64| {
        records.push(OfferRecord {
            timestamp: date.and_hms_opt(hour, 0, 0).expect("hour < 24"),
            unit_id: unit_id.to_string(),
            operator_id: operator_id.to_string(),
            price_eur_mwh: price.max(0.0),
            quantity_mw: quantity.clamp(0.0, q_max),
        });
    };

    match archetype {
        "solar" => {
            // Daylight only, bell-shaped output, strong summer/winter swing.
            let season = 1.0 + 0.5 * ((month as f64 - 7.0) * std::f64::consts::PI / 6.0).cos();
            for hour in [8u32, 10, 11, 12, 14, 16] {
                let bell = 1.0 - ((hour as f64 - 12.5) / 5.5).powi(2);
                let price = uniform(rng, 1.0, 3.5);
                let q = q_max * bell * season * uniform(rng, 0.85, 1.0);
                push(hour, price, q);
            }
        }
        "wind" => {
            // Around the clock, erratic output, mild winter surplus.
            let season = 1.0 + 0.25 * ((month as f64 - 1.0) * std::f64::consts::PI / 6.0).cos();
            for hour in [0u32, 3, 7, 11, 15, 19, 22, 23] {
                let price = uniform(rng, 4.0, 8.0);
                let q = q_max * season * uniform(rng, 0.05, 1.0);
                push(hour, price, q);
            }
        }
        "hydro" => {
            // Steady availability, spring-melt bulge, mid price.
            let season = if (3..=5).contains(&month) { 1.35 } else { 1.0 };
            for hour in [1u32, 5, 9, 12, 16, 20] {
                let price = uniform(rng, 42.0, 58.0);
                let q = q_max * season * uniform(rng, 0.45, 0.8);
                push(hour, price, q);
            }
        }
        "gas" => {
            // Peak-chasing dispatchable plant.
            for hour in [7u32, 9, 10, 11, 13, 18, 19, 21] {
                let price = uniform(rng, 110.0, 140.0);
                let q = q_max * uniform(rng, 0.3, 1.0);
                push(hour, price, q);
            }
        }
        "coal" => {
            // Baseload: always on, flat output, top of the price range.
            for hour in [0u32, 4, 8, 12, 16, 20] {
                let price = uniform(rng, 155.0, 175.0);
                push(hour, price, q_max);
            }
        }
        other => unreachable!("unknown archetype {other}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{build_unit_profiles, filter_low_activity_units};

    #[test]
    fn generator_is_deterministic_and_sized_right() {
        let spec = SyntheticSpec::default();
        let a = synthetic_offer_history(&spec);
        let b = synthetic_offer_history(&spec);
        assert_eq!(a, b);

        let units: std::collections::BTreeSet<&str> =
            a.iter().map(|r| r.unit_id.as_str()).collect();
        assert_eq!(units.len(), 60 + 14);
        assert_eq!(archetype_of_unit("solar-03"), Some("solar"));
        assert_eq!(archetype_of_unit("sparse-01"), None);
    }

    #[test]
    fn activity_filter_removes_exactly_the_sparse_tail() {
        let records = synthetic_offer_history(&SyntheticSpec::default());
        let (kept, report) = filter_low_activity_units(&records, 0.2).unwrap();
        assert_eq!(report.removed_units.len(), 14);
        assert!(report.removed_units.iter().all(|u| u.starts_with("sparse-")));
        assert_eq!(report.kept_units, 60);
        let (profiles, skipped) = build_unit_profiles(&kept).unwrap();
        assert_eq!(profiles.len(), 60);
        assert!(skipped.is_empty());
    }

    #[test]
    fn archetype_features_are_separated() {
        let records = synthetic_offer_history(&SyntheticSpec::default());
        let (profiles, _) = build_unit_profiles(&records).unwrap();
        for p in &profiles {
            match archetype_of_unit(&p.unit_id) {
                Some("solar") => {
                    assert!(p.features.p_w < 4.0, "{}: p_w {}", p.unit_id, p.features.p_w);
                    assert_eq!(p.features.h_night, 0.0);
                }
                Some("coal") => {
                    assert!(p.features.p_w > 150.0);
                    assert!(p.features.cv < 1e-9);
                    assert!(p.features.flex_q < 1e-9);
                }
                Some("gas") => {
                    assert!(p.features.p_w > 100.0 && p.features.p_w < 150.0);
                    assert!(p.features.h_peak > 35.0);
                    assert_eq!(p.features.h_night, 0.0);
                }
                _ => {}
            }
        }
    }
}
