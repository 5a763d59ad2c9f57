//! From clustered unit profiles to a runnable scenario.

use super::features::UnitProfile;
use super::{classify_segment, ProductionUnit, Scenario};
use crate::error::{Error, Result};

/// Turns clustered units into operator portfolios.
///
/// Each unit becomes one production unit: its capacity is the mean offered
/// quantity, its marginal cost the quantity-weighted mean offer price, its
/// technology the cluster it landed in (labelled `C1`, `C2`, ... in cluster
/// index order), and its segment falls out of the price threshold. Operators
/// are taken from the history's `operator_id` column unchanged.
pub fn build_operator_portfolios(
    profiles: &[UnitProfile],
    assignments: &[usize],
    threshold_eur_mwh: f64,
    name: impl Into<String>,
) -> Result<Scenario> {
    if profiles.is_empty() {
        return Err(Error::EmptyInput {
            what: "unit profiles".into(),
        });
    }
    if profiles.len() != assignments.len() {
        return Err(Error::InvalidData {
            what: "cluster assignments".into(),
            detail: format!(
                "{} assignments for {} profiles",
                assignments.len(),
                profiles.len()
            ),
        });
    }
    if !threshold_eur_mwh.is_finite() || threshold_eur_mwh <= 0.0 {
        return Err(Error::InvalidData {
            what: "segment threshold".into(),
            detail: format!("{threshold_eur_mwh} must be finite and > 0"),
        });
    }
    for profile in profiles {
        if profile.operator_id.is_empty() {
            return Err(Error::InvalidData {
                what: "unit profile".into(),
                detail: format!("unit `{}` has no operator", profile.unit_id),
            });
        }
    }

    let units = profiles
        .iter()
        .zip(assignments)
        .map(|(profile, &cluster)| ProductionUnit {
            unit_id: profile.unit_id.clone(),
            operator_id: profile.operator_id.clone(),
            technology: format!("C{}", cluster + 1),
            segment: classify_segment(profile.features.p_w, threshold_eur_mwh),
            capacity_mw: profile.q_mean,
            marginal_cost_eur_mwh: profile.features.p_w,
        })
        .collect();
    Scenario::new(name, units)
}
