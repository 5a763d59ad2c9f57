//! Production fleets and where they come from.
//!
//! A [`Scenario`] is the static description a market run needs: units with
//! capacities, marginal costs, owners, technologies, and segment membership.
//! Two sources are supported:
//!
//! * [`build_pniec_scenario`] — a built-in two-operator system sized after
//!   the Italian 2030 national energy plan targets.
//! * the clustering pipeline ([`offers`] → [`features`] → [`cluster`] →
//!   [`portfolio`]) — derives operator portfolios from historical market
//!   offer data.

mod cluster;
mod features;
mod offers;
mod portfolio;
pub mod synthetic;

pub use cluster::{
    kmeans_cluster, quality_indices, select_k, ClusteringReport, IndexScores, KEvaluation,
    KMeansOutcome,
};
pub use features::{
    build_unit_profiles, compute_unit_features, feature_matrix, zscore_normalize, UnitFeatures,
    UnitProfile, ZScore,
};
pub use offers::{
    filter_low_activity_units, load_offers_csv, write_offers_csv, ActivityFilter, OfferRecord,
    OffersLoad, RejectedRow,
};
pub use portfolio::build_operator_portfolios;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{MarginalCostBook, Segment, SupplyOffer};

/// Offer-price threshold separating the near-zero-marginal-cost segment from
/// the rest when segments are assigned from data (€/MWh).
pub const SEGMENT_THRESHOLD_EUR_MWH: f64 = 110.0;

/// Costs strictly below the threshold belong to the NMCS segment.
pub fn classify_segment(marginal_cost_eur_mwh: f64, threshold_eur_mwh: f64) -> Segment {
    if marginal_cost_eur_mwh < threshold_eur_mwh {
        Segment::Nmcs
    } else {
        Segment::Nnmcs
    }
}

/// One dispatchable unit of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductionUnit {
    pub unit_id: String,
    pub operator_id: String,
    pub technology: String,
    pub segment: Segment,
    pub capacity_mw: f64,
    pub marginal_cost_eur_mwh: f64,
}

/// A named fleet of production units, validated on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioFile", into = "ScenarioFile")]
pub struct Scenario {
    name: String,
    units: Vec<ProductionUnit>,
}

/// Raw serialized shape; conversion into [`Scenario`] runs validation, so a
/// hand-edited JSON file cannot smuggle in a broken fleet.
#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    name: String,
    units: Vec<ProductionUnit>,
}

impl TryFrom<ScenarioFile> for Scenario {
    type Error = Error;

    fn try_from(file: ScenarioFile) -> Result<Self> {
        Scenario::new(file.name, file.units)
    }
}

impl From<Scenario> for ScenarioFile {
    fn from(scenario: Scenario) -> Self {
        ScenarioFile {
            name: scenario.name,
            units: scenario.units,
        }
    }
}

impl Scenario {
    pub fn new(name: impl Into<String>, units: Vec<ProductionUnit>) -> Result<Self> {
        let name = name.into();
        if units.is_empty() {
            return Err(Error::EmptyInput {
                what: format!("scenario `{name}`"),
            });
        }
        let mut seen = BTreeSet::new();
        for unit in &units {
            if unit.unit_id.is_empty() || unit.operator_id.is_empty() || unit.technology.is_empty()
            {
                return Err(Error::InvalidData {
                    what: "production unit".into(),
                    detail: format!("unit `{}` has an empty identifier field", unit.unit_id),
                });
            }
            if !unit.capacity_mw.is_finite() || unit.capacity_mw <= 0.0 {
                return Err(Error::InvalidData {
                    what: "production unit".into(),
                    detail: format!(
                        "unit `{}` capacity {} must be finite and > 0",
                        unit.unit_id, unit.capacity_mw
                    ),
                });
            }
            if !unit.marginal_cost_eur_mwh.is_finite() || unit.marginal_cost_eur_mwh < 0.0 {
                return Err(Error::InvalidData {
                    what: "production unit".into(),
                    detail: format!(
                        "unit `{}` marginal cost {} must be finite and >= 0",
                        unit.unit_id, unit.marginal_cost_eur_mwh
                    ),
                });
            }
            if !seen.insert(unit.unit_id.as_str()) {
                return Err(Error::DuplicateUnit {
                    unit_id: unit.unit_id.clone(),
                });
            }
        }
        Ok(Self { name, units })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn units(&self) -> &[ProductionUnit] {
        &self.units
    }

    /// Operators in order of first appearance — the canonical iteration
    /// order for training and reporting.
    pub fn operators(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for unit in &self.units {
            if !out.contains(&unit.operator_id) {
                out.push(unit.operator_id.clone());
            }
        }
        out
    }

    /// Technologies one operator owns, in order of first appearance. This
    /// order defines the operator's action-space digit order.
    pub fn technologies_of(&self, operator_id: &str) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for unit in &self.units {
            if unit.operator_id == operator_id && !out.contains(&unit.technology) {
                out.push(unit.technology.clone());
            }
        }
        out
    }

    pub fn total_capacity_mw(&self) -> f64 {
        self.units.iter().map(|u| u.capacity_mw).sum()
    }

    pub fn cost_book(&self) -> MarginalCostBook {
        self.units
            .iter()
            .map(|u| (u.unit_id.clone(), u.marginal_cost_eur_mwh))
            .collect()
    }

    /// Offer stack where each unit is priced at
    /// `marginal cost * (1 + markup(unit))`.
    pub fn offers_with(&self, markup: &dyn Fn(&ProductionUnit) -> f64) -> Result<Vec<SupplyOffer>> {
        self.units
            .iter()
            .map(|unit| {
                let m = markup(unit);
                if !m.is_finite() || m < 0.0 {
                    return Err(Error::InvalidData {
                        what: "markup".into(),
                        detail: format!("markup {m} for unit `{}` must be finite and >= 0", unit.unit_id),
                    });
                }
                Ok(SupplyOffer {
                    unit_id: unit.unit_id.clone(),
                    operator_id: unit.operator_id.clone(),
                    technology: unit.technology.clone(),
                    segment: unit.segment,
                    price_eur_mwh: unit.marginal_cost_eur_mwh * (1.0 + m),
                    quantity_mw: unit.capacity_mw,
                })
            })
            .collect()
    }

    /// Truthful offer stack: every unit priced at marginal cost.
    pub fn offers_at_cost(&self) -> Vec<SupplyOffer> {
        self.offers_with(&|_| 0.0)
            .expect("zero markup is always valid")
    }
}

/// The built-in two-operator reference fleet, sized after the Italian 2030
/// national energy and climate plan: each operator holds photovoltaic, wind,
/// hydro (the NMCS side), gas and coal (the NNMCS side), 2 GW in total.
pub fn build_pniec_scenario() -> Scenario {
    let spec: [(&str, &str, Segment, f64, f64); 10] = [
        ("OpA", "PV", Segment::Nmcs, 4.2, 120.0),
        ("OpA", "WIND", Segment::Nmcs, 5.0, 120.0),
        ("OpA", "HYDRO", Segment::Nmcs, 12.0, 160.0),
        ("OpA", "GAS", Segment::Nnmcs, 94.0, 420.0),
        ("OpA", "COAL", Segment::Nnmcs, 149.0, 180.0),
        ("OpB", "PV", Segment::Nmcs, 2.7, 120.0),
        ("OpB", "WIND", Segment::Nmcs, 2.0, 120.0),
        ("OpB", "HYDRO", Segment::Nmcs, 20.0, 160.0),
        ("OpB", "GAS", Segment::Nnmcs, 69.0, 420.0),
        ("OpB", "COAL", Segment::Nnmcs, 139.0, 180.0),
    ];
    let units = spec
        .iter()
        .map(|&(op, tech, segment, cost, cap)| ProductionUnit {
            unit_id: format!("{op}-{tech}"),
            operator_id: op.to_string(),
            technology: tech.to_string(),
            segment,
            capacity_mw: cap,
            marginal_cost_eur_mwh: cost,
        })
        .collect();
    Scenario::new("pniec2030", units).expect("built-in scenario is valid")
}

pub fn write_scenario_json(path: impl AsRef<Path>, scenario: &Scenario) -> Result<()> {
    let json = serde_json::to_string_pretty(scenario)?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn read_scenario_json(path: impl AsRef<Path>) -> Result<Scenario> {
    let raw = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&raw)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_fleet_shape() {
        let scenario = build_pniec_scenario();
        assert_eq!(scenario.units().len(), 10);
        assert_eq!(scenario.total_capacity_mw(), 2000.0);
        assert_eq!(scenario.operators(), vec!["OpA", "OpB"]);
        assert_eq!(
            scenario.technologies_of("OpA"),
            vec!["PV", "WIND", "HYDRO", "GAS", "COAL"]
        );
        let nmcs_capacity: f64 = scenario
            .units()
            .iter()
            .filter(|u| u.segment == Segment::Nmcs)
            .map(|u| u.capacity_mw)
            .sum();
        assert_eq!(nmcs_capacity, 800.0);
    }

    #[test]
    fn markup_offers_price_above_cost() {
        let scenario = build_pniec_scenario();
        let offers = scenario.offers_with(&|u| if u.technology == "GAS" { 0.1 } else { 0.0 }).unwrap();
        let gas_a = offers.iter().find(|o| o.unit_id == "OpA-GAS").unwrap();
        assert!((gas_a.price_eur_mwh - 103.4).abs() < 1e-12);
        let pv_a = offers.iter().find(|o| o.unit_id == "OpA-PV").unwrap();
        assert_eq!(pv_a.price_eur_mwh, 4.2);
        assert!(scenario.offers_with(&|_| -0.1).is_err());
    }

    #[test]
    fn scenario_json_round_trips_and_validates() {
        let dir = std::env::temp_dir().join("spaclab-scenario-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("scenario.json");
        let scenario = build_pniec_scenario();
        write_scenario_json(&path, &scenario).unwrap();
        let back = read_scenario_json(&path).unwrap();
        assert_eq!(back, scenario);

        // A corrupt file (duplicate unit) must fail validation on load.
        let mut json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let unit = json["units"][0].clone();
        json["units"].as_array_mut().unwrap().push(unit);
        let bad_path = dir.join("bad.json");
        std::fs::write(&bad_path, json.to_string()).unwrap();
        assert!(read_scenario_json(&bad_path).is_err());
    }

    #[test]
    fn segment_threshold_is_strict_less_than() {
        assert_eq!(classify_segment(109.99, 110.0), Segment::Nmcs);
        assert_eq!(classify_segment(110.0, 110.0), Segment::Nnmcs);
        assert_eq!(classify_segment(156.03, 110.0), Segment::Nnmcs);
    }

    #[test]
    fn invalid_units_are_rejected() {
        let unit = ProductionUnit {
            unit_id: "u".into(),
            operator_id: "op".into(),
            technology: "T".into(),
            segment: Segment::Nmcs,
            capacity_mw: 0.0,
            marginal_cost_eur_mwh: 5.0,
        };
        assert!(Scenario::new("s", vec![unit]).is_err());
        assert!(Scenario::new("s", vec![]).is_err());
    }
}
