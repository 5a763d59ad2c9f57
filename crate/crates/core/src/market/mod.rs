//! Auction mechanics for a single-hour (or single-interval) electricity market.
//!
//! Producers submit price/quantity offers, a demand quantity must be covered,
//! and one of three settlement rules decides who gets dispatched and at what
//! price:
//!
//! * **Pay-as-Bid** ([`clear_pab`](crate::market::clear_pab)) — every
//!   dispatched unit is paid its own offer price.
//! * **Pay-as-Clear** ([`clear_pac`](crate::market::clear_pac)) — every
//!   dispatched unit is paid the single marginal price of the whole stack.
//! * **Segmented Pay-as-Clear** ([`clear_spac`](crate::market::clear_spac)) —
//!   offers are partitioned into a near-zero-marginal-cost segment (NMCS) and
//!   the remaining segment (NNMCS); demand is split between the two segments
//!   so that the combined cost of the two uniform-price sub-markets is
//!   minimal, and each segment settles at its own marginal price.
//!
//! All three share one pricing convention, chosen once and used everywhere:
//! the marginal price at quantity `x` is the offer price of the unit that
//! supplies the *last increment* before `x`. When `x` lands exactly on a
//! cumulative-capacity breakpoint the just-completed offer sets the price,
//! not the next (more expensive) one.

mod clearing;
mod curve;
mod io;

pub use clearing::{clear_pab, clear_pac, clear_spac, clear_spac_oracle, compute_profits};
pub use io::{read_offer_stack_csv, write_offer_stack_csv};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quantity tolerance (MWh). Cumulative capacities within this of each other
/// are treated as the same breakpoint.
pub(crate) const EPS_QTY: f64 = 1e-9;

/// Money tolerance (€). Clearing costs within this of each other tie.
pub(crate) const EPS_MONEY: f64 = 1e-6;

/// Settlement rule applied to a cleared market.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mechanism {
    /// Dispatched units are paid their own offer price.
    #[serde(rename = "pab")]
    PayAsBid,
    /// Dispatched units are paid the system marginal price.
    #[serde(rename = "pac")]
    PayAsClear,
    /// Demand is split across two segments, each settling at its own
    /// marginal price.
    #[serde(rename = "spac")]
    SegmentedPayAsClear,
}

impl Mechanism {
    pub const ALL: [Mechanism; 3] = [
        Mechanism::PayAsBid,
        Mechanism::PayAsClear,
        Mechanism::SegmentedPayAsClear,
    ];

    /// Short lowercase tag, the same one used in CSV columns and file names.
    pub fn tag(self) -> &'static str {
        match self {
            Mechanism::PayAsBid => "pab",
            Mechanism::PayAsClear => "pac",
            Mechanism::SegmentedPayAsClear => "spac",
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Mechanism::PayAsBid => "PaB",
            Mechanism::PayAsClear => "PaC",
            Mechanism::SegmentedPayAsClear => "SPaC",
        };
        f.write_str(name)
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pab" => Ok(Mechanism::PayAsBid),
            "pac" => Ok(Mechanism::PayAsClear),
            "spac" => Ok(Mechanism::SegmentedPayAsClear),
            other => Err(Error::InvalidData {
                what: "mechanism".into(),
                detail: format!("`{other}` is not one of pab, pac, spac"),
            }),
        }
    }
}

/// Market segment a unit offers into.
///
/// NMCS collects near-zero-marginal-cost production (renewables, hydro);
/// NNMCS collects everything else. Only Segmented Pay-as-Clear looks at the
/// segment; the other two mechanisms ignore it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Segment {
    #[serde(rename = "NMCS")]
    Nmcs,
    #[serde(rename = "NNMCS")]
    Nnmcs,
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Segment::Nmcs => "NMCS",
            Segment::Nnmcs => "NNMCS",
        })
    }
}

impl FromStr for Segment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "NMCS" => Ok(Segment::Nmcs),
            "NNMCS" => Ok(Segment::Nnmcs),
            other => Err(Error::InvalidData {
                what: "segment".into(),
                detail: format!("`{other}` is not NMCS or NNMCS"),
            }),
        }
    }
}

/// One price/quantity offer submitted to a clearing round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupplyOffer {
    pub unit_id: String,
    pub operator_id: String,
    pub technology: String,
    pub segment: Segment,
    /// Offer price in €/MWh. Must be finite and non-negative.
    pub price_eur_mwh: f64,
    /// Offered quantity in MW (equal to MWh over the cleared interval).
    /// Must be finite and strictly positive.
    pub quantity_mw: f64,
}

/// True marginal production costs, keyed by unit id. Needed to turn cleared
/// payments into profits.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MarginalCostBook {
    costs: BTreeMap<String, f64>,
}

impl MarginalCostBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, unit_id: impl Into<String>, cost_eur_mwh: f64) {
        self.costs.insert(unit_id.into(), cost_eur_mwh);
    }

    pub fn get(&self, unit_id: &str) -> Option<f64> {
        self.costs.get(unit_id).copied()
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }
}

impl FromIterator<(String, f64)> for MarginalCostBook {
    fn from_iter<I: IntoIterator<Item = (String, f64)>>(iter: I) -> Self {
        Self {
            costs: iter.into_iter().collect(),
        }
    }
}

/// Anomalies observed while clearing, carried alongside the outcome instead
/// of being silently corrected.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeFlags {
    /// Two or more demand splits achieved the same minimal cost; the split
    /// that dispatches the most NMCS energy was kept.
    pub tie_split: bool,
    /// The cleared NMCS price came out above the NNMCS price (possible under
    /// strategic offers). Prices are reported as cleared, not re-ordered.
    pub nmcs_price_above_nnmcs: bool,
}

impl OutcomeFlags {
    pub fn any(&self) -> bool {
        self.tie_split || self.nmcs_price_above_nnmcs
    }
}

/// Result of clearing one demand quantity against one offer stack.
///
/// `accepted` has an entry for *every* offered unit (zero when rejected);
/// `unit_payment_price` only lists units with non-zero dispatch. The segment
/// prices and the demand split are only populated where they mean something:
/// Pay-as-Clear fills `nnmcs_price` with the system price, Segmented
/// Pay-as-Clear fills all four, Pay-as-Bid none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClearingOutcome {
    pub mechanism: Mechanism,
    /// Demand covered by this clearing, in MWh.
    pub demand_mwh: f64,
    /// Dispatched quantity per unit id (MWh); zero for rejected units.
    pub accepted: BTreeMap<String, f64>,
    /// Price actually paid per dispatched unit (€/MWh).
    pub unit_payment_price: BTreeMap<String, f64>,
    /// Owning operator per unit id, so profits can be recomputed from the
    /// outcome alone.
    pub unit_operator: BTreeMap<String, String>,
    /// Unified purchase price: total cost divided by demand (€/MWh). Zero
    /// when demand is zero.
    pub pun: f64,
    /// Total buyer expenditure (€).
    pub total_cost: f64,
    /// Marginal price of the NMCS segment, where defined.
    pub nmcs_price: Option<f64>,
    /// Marginal price of the NNMCS segment (for Pay-as-Clear: the system
    /// marginal price), where defined.
    pub nnmcs_price: Option<f64>,
    /// Demand routed to the NMCS segment (Segmented Pay-as-Clear only).
    pub d_r: Option<f64>,
    /// Demand routed to the NNMCS segment (Segmented Pay-as-Clear only).
    pub d_g: Option<f64>,
    /// Profit per operator (€): Σ (payment − marginal cost) · dispatched.
    pub operator_profit: BTreeMap<String, f64>,
    pub flags: OutcomeFlags,
}

impl ClearingOutcome {
    /// Total dispatched energy (MWh). Equals `demand_mwh` up to float noise.
    pub fn dispatched_mwh(&self) -> f64 {
        self.accepted.values().sum()
    }

    /// Total profit across all operators (€).
    pub fn total_profit(&self) -> f64 {
        self.operator_profit.values().sum()
    }
}

/// Sorts offers into merit order: ascending price, ties broken by unit id so
/// the order is fully deterministic.
pub fn sort_merit(offers: &[SupplyOffer]) -> Result<Vec<SupplyOffer>> {
    if offers.is_empty() {
        return Err(Error::EmptyStack);
    }
    let mut sorted = offers.to_vec();
    sorted.sort_by(|a, b| {
        a.price_eur_mwh
            .total_cmp(&b.price_eur_mwh)
            .then_with(|| a.unit_id.cmp(&b.unit_id))
    });
    Ok(sorted)
}

/// Checks stack-level invariants shared by all clearing mechanisms: at least
/// one offer, well-formed prices/quantities, no duplicate unit ids.
pub(crate) fn validate_stack(offers: &[SupplyOffer]) -> Result<()> {
    if offers.is_empty() {
        return Err(Error::EmptyStack);
    }
    let mut seen = std::collections::BTreeSet::new();
    for offer in offers {
        if offer.unit_id.is_empty() {
            return Err(Error::InvalidOffer {
                unit_id: "<unnamed>".into(),
                reason: "empty unit id".into(),
            });
        }
        if !offer.price_eur_mwh.is_finite() || offer.price_eur_mwh < 0.0 {
            return Err(Error::InvalidOffer {
                unit_id: offer.unit_id.clone(),
                reason: format!("price {} must be finite and >= 0", offer.price_eur_mwh),
            });
        }
        if !offer.quantity_mw.is_finite() || offer.quantity_mw <= 0.0 {
            return Err(Error::InvalidOffer {
                unit_id: offer.unit_id.clone(),
                reason: format!("quantity {} must be finite and > 0", offer.quantity_mw),
            });
        }
        if !seen.insert(offer.unit_id.as_str()) {
            return Err(Error::DuplicateUnit {
                unit_id: offer.unit_id.clone(),
            });
        }
    }
    Ok(())
}

/// Validates the demand quantity itself (finite, non-negative).
pub(crate) fn validate_demand(demand: f64) -> Result<()> {
    if !demand.is_finite() || demand < 0.0 {
        return Err(Error::InvalidData {
            what: "demand".into(),
            detail: format!("{demand} must be finite and >= 0"),
        });
    }
    Ok(())
}
