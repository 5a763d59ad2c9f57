//! The three settlement rules, plus the brute-force reference for the
//! segmented one.

use std::collections::BTreeMap;

use super::curve::MeritCurve;
use super::{
    validate_demand, validate_stack, ClearingOutcome, MarginalCostBook, Mechanism, OutcomeFlags,
    Segment, SupplyOffer, EPS_MONEY, EPS_QTY,
};
use crate::error::{Error, Result};

/// Clears `demand_mwh` pay-as-bid: offers are dispatched in merit order and
/// every dispatched unit is paid its own offer price.
pub fn clear_pab(
    offers: &[SupplyOffer],
    demand_mwh: f64,
    costs: &MarginalCostBook,
) -> Result<ClearingOutcome> {
    validate_stack(offers)?;
    validate_demand(demand_mwh)?;
    let curve = MeritCurve::build(offers)?;
    check_capacity(demand_mwh, curve.capacity())?;

    let mut outcome = outcome_shell(Mechanism::PayAsBid, demand_mwh, offers);
    let mut total_cost = 0.0;
    for (idx, qty) in curve.dispatch(demand_mwh) {
        let offer = &curve.offers[idx];
        total_cost += qty * offer.price_eur_mwh;
        outcome.accepted.insert(offer.unit_id.clone(), qty);
        outcome
            .unit_payment_price
            .insert(offer.unit_id.clone(), offer.price_eur_mwh);
    }
    outcome.total_cost = total_cost;
    outcome.pun = unit_price(total_cost, demand_mwh);
    outcome.operator_profit = compute_profits(&outcome, costs)?;
    Ok(outcome)
}

/// Clears `demand_mwh` pay-as-clear: offers are dispatched in merit order and
/// every dispatched unit is paid the system marginal price. The marginal
/// price is reported in `nnmcs_price`.
pub fn clear_pac(
    offers: &[SupplyOffer],
    demand_mwh: f64,
    costs: &MarginalCostBook,
) -> Result<ClearingOutcome> {
    validate_stack(offers)?;
    validate_demand(demand_mwh)?;
    let curve = MeritCurve::build(offers)?;
    check_capacity(demand_mwh, curve.capacity())?;

    let mut outcome = outcome_shell(Mechanism::PayAsClear, demand_mwh, offers);
    let marginal = curve.price_at(demand_mwh);
    if let Some(price) = marginal {
        for (idx, qty) in curve.dispatch(demand_mwh) {
            let offer = &curve.offers[idx];
            outcome.accepted.insert(offer.unit_id.clone(), qty);
            outcome.unit_payment_price.insert(offer.unit_id.clone(), price);
        }
        outcome.total_cost = demand_mwh * price;
    }
    outcome.nnmcs_price = marginal;
    outcome.pun = unit_price(outcome.total_cost, demand_mwh);
    outcome.operator_profit = compute_profits(&outcome, costs)?;
    Ok(outcome)
}

/// Clears `demand_mwh` under segmented pay-as-clear.
///
/// Offers are partitioned by [`Segment`]; a demand split `d_r + d_g = demand`
/// is chosen so that `d_r * price_r(d_r) + d_g * price_g(d_g)` is minimal,
/// and each segment settles uniformly at its own marginal price.
///
/// The cost of a split is piecewise linear in `d_r`, changing slope (and
/// jumping) only where `d_r` crosses a cumulative-capacity breakpoint of one
/// of the two merit curves. The minimum is therefore attained at one of:
/// the feasibility bounds, an NMCS breakpoint, or `demand` minus an NNMCS
/// breakpoint — a small candidate set that is enumerated exactly instead of
/// searched numerically. Ties are resolved toward the largest `d_r` (prefer
/// dispatching the near-zero-cost segment) and flagged on the outcome.
pub fn clear_spac(
    offers: &[SupplyOffer],
    demand_mwh: f64,
    costs: &MarginalCostBook,
) -> Result<ClearingOutcome> {
    let setup = SpacSetup::prepare(offers, demand_mwh)?;
    let mut candidates = vec![setup.lo, setup.hi];
    for &c in &setup.nmcs.cums {
        if c > setup.lo + EPS_QTY && c < setup.hi - EPS_QTY {
            candidates.push(c);
        }
    }
    for &c in &setup.nnmcs.cums {
        let x = demand_mwh - c;
        if x > setup.lo + EPS_QTY && x < setup.hi - EPS_QTY {
            candidates.push(x);
        }
    }
    setup.solve(candidates, offers, costs)
}

/// Brute-force reference for [`clear_spac`]: evaluates the split cost over a
/// dense grid of `d_r` values with spacing `step_mwh` (plus the upper bound
/// itself) and picks the cheapest, with the same largest-`d_r` tie rule.
///
/// The grid can miss an optimal breakpoint by up to one step, so its cost is
/// an upper bound on the exact one; agreement within `step * price-scale` is
/// the expected relationship in general. When every offer quantity and the
/// demand are multiples of the step, the grid hits every breakpoint and the
/// two solvers agree to float precision.
pub fn clear_spac_oracle(
    offers: &[SupplyOffer],
    demand_mwh: f64,
    costs: &MarginalCostBook,
    step_mwh: f64,
) -> Result<ClearingOutcome> {
    if !step_mwh.is_finite() || step_mwh <= 0.0 {
        return Err(Error::InvalidData {
            what: "grid step".into(),
            detail: format!("{step_mwh} must be finite and > 0"),
        });
    }
    let setup = SpacSetup::prepare(offers, demand_mwh)?;
    // Grid points are indexed rather than accumulated so rounding error
    // stays at one multiplication regardless of grid length.
    let span = setup.hi - setup.lo;
    let n = (span / step_mwh).ceil() as usize;
    let mut candidates = Vec::with_capacity(n + 1);
    for k in 0..n {
        let x = setup.lo + k as f64 * step_mwh;
        if x < setup.hi - EPS_QTY {
            candidates.push(x);
        }
    }
    candidates.push(setup.hi);
    setup.solve(candidates, offers, costs)
}

/// Profit per operator implied by an outcome and the true marginal costs:
/// Σ over dispatched units of `(payment price − marginal cost) · quantity`.
/// Operators present in the stack but dispatched for nothing get an explicit
/// zero entry.
pub fn compute_profits(
    outcome: &ClearingOutcome,
    costs: &MarginalCostBook,
) -> Result<BTreeMap<String, f64>> {
    let mut profits: BTreeMap<String, f64> = outcome
        .unit_operator
        .values()
        .map(|op| (op.clone(), 0.0))
        .collect();
    for (unit_id, &qty) in &outcome.accepted {
        if qty <= EPS_QTY {
            continue;
        }
        let price = outcome.unit_payment_price.get(unit_id).ok_or_else(|| {
            Error::InvalidData {
                what: "clearing outcome".into(),
                detail: format!("dispatched unit `{unit_id}` has no payment price"),
            }
        })?;
        let cost = costs.get(unit_id).ok_or_else(|| Error::MissingCost {
            unit_id: unit_id.clone(),
        })?;
        let operator = outcome.unit_operator.get(unit_id).ok_or_else(|| {
            Error::InvalidData {
                what: "clearing outcome".into(),
                detail: format!("dispatched unit `{unit_id}` has no operator"),
            }
        })?;
        *profits.entry(operator.clone()).or_insert(0.0) += (price - cost) * qty;
    }
    Ok(profits)
}

// ---------------------------------------------------------------------------

/// Shared preparation for the exact and grid-search segmented solvers:
/// validation, the two per-segment merit curves, and the feasible range of
/// `d_r`.
struct SpacSetup {
    demand: f64,
    nmcs: MeritCurve,
    nnmcs: MeritCurve,
    lo: f64,
    hi: f64,
}

impl SpacSetup {
    fn prepare(offers: &[SupplyOffer], demand_mwh: f64) -> Result<Self> {
        validate_stack(offers)?;
        validate_demand(demand_mwh)?;
        let (r, g): (Vec<_>, Vec<_>) = offers
            .iter()
            .cloned()
            .partition(|o| o.segment == Segment::Nmcs);
        let nmcs = MeritCurve::build(&r)?;
        let nnmcs = MeritCurve::build(&g)?;
        check_capacity(demand_mwh, nmcs.capacity() + nnmcs.capacity())?;
        let lo = (demand_mwh - nnmcs.capacity()).max(0.0);
        let hi = demand_mwh.min(nmcs.capacity());
        Ok(Self {
            demand: demand_mwh,
            nmcs,
            nnmcs,
            lo,
            hi,
        })
    }

    fn split_cost(&self, d_r: f64) -> f64 {
        self.nmcs.uniform_cost(d_r) + self.nnmcs.uniform_cost(self.demand - d_r)
    }

    /// Evaluates the candidate splits, picks the cheapest (largest `d_r` on
    /// ties), and assembles the full outcome.
    fn solve(
        &self,
        mut candidates: Vec<f64>,
        offers: &[SupplyOffer],
        costs: &MarginalCostBook,
    ) -> Result<ClearingOutcome> {
        for c in candidates.iter_mut() {
            *c = c.clamp(self.lo, self.hi);
        }
        candidates.sort_by(f64::total_cmp);
        candidates.dedup_by(|a, b| (*a - *b).abs() <= EPS_QTY);

        let mut best_x = candidates[0];
        let mut best_cost = self.split_cost(best_x);
        let mut tie_split = false;
        for &x in &candidates[1..] {
            let cost = self.split_cost(x);
            if cost < best_cost - EPS_MONEY {
                best_cost = cost;
                best_x = x;
                tie_split = false;
            } else if cost <= best_cost + EPS_MONEY {
                // Same cost at a materially different split: keep the larger
                // d_r and remember that the choice was not unique.
                if x > best_x + 1e-6 {
                    tie_split = true;
                }
                best_cost = best_cost.min(cost);
                best_x = x;
            }
        }

        let d_r = best_x;
        let d_g = (self.demand - best_x).max(0.0);
        let price_r = self.nmcs.price_at(d_r);
        let price_g = self.nnmcs.price_at(d_g);
        let total_cost = self.nmcs.uniform_cost(d_r) + self.nnmcs.uniform_cost(d_g);

        let mut outcome = outcome_shell(Mechanism::SegmentedPayAsClear, self.demand, offers);
        if let Some(p) = price_r {
            for (idx, qty) in self.nmcs.dispatch(d_r) {
                let offer = &self.nmcs.offers[idx];
                outcome.accepted.insert(offer.unit_id.clone(), qty);
                outcome.unit_payment_price.insert(offer.unit_id.clone(), p);
            }
        }
        if let Some(p) = price_g {
            for (idx, qty) in self.nnmcs.dispatch(d_g) {
                let offer = &self.nnmcs.offers[idx];
                outcome.accepted.insert(offer.unit_id.clone(), qty);
                outcome.unit_payment_price.insert(offer.unit_id.clone(), p);
            }
        }
        outcome.total_cost = total_cost;
        outcome.pun = unit_price(total_cost, self.demand);
        outcome.nmcs_price = price_r;
        outcome.nnmcs_price = price_g;
        outcome.d_r = Some(d_r);
        outcome.d_g = Some(d_g);
        outcome.flags = OutcomeFlags {
            tie_split,
            nmcs_price_above_nnmcs: matches!(
                (price_r, price_g),
                (Some(pr), Some(pg)) if pr > pg + EPS_QTY
            ),
        };
        outcome.operator_profit = compute_profits(&outcome, costs)?;
        Ok(outcome)
    }
}

/// Empty outcome with every offered unit listed as rejected (quantity zero)
/// and the unit → operator map filled in.
fn outcome_shell(mechanism: Mechanism, demand_mwh: f64, offers: &[SupplyOffer]) -> ClearingOutcome {
    let mut accepted = BTreeMap::new();
    let mut unit_operator = BTreeMap::new();
    for offer in offers {
        accepted.insert(offer.unit_id.clone(), 0.0);
        unit_operator.insert(offer.unit_id.clone(), offer.operator_id.clone());
    }
    ClearingOutcome {
        mechanism,
        demand_mwh,
        accepted,
        unit_payment_price: BTreeMap::new(),
        unit_operator,
        pun: 0.0,
        total_cost: 0.0,
        nmcs_price: None,
        nnmcs_price: None,
        d_r: None,
        d_g: None,
        operator_profit: BTreeMap::new(),
        flags: OutcomeFlags::default(),
    }
}

fn check_capacity(demand: f64, capacity: f64) -> Result<()> {
    if demand > capacity + EPS_QTY {
        Err(Error::InfeasibleDemand {
            demand,
            capacity,
            shortfall: demand - capacity,
        })
    } else {
        Ok(())
    }
}

fn unit_price(total_cost: f64, demand: f64) -> f64 {
    if demand > EPS_QTY {
        total_cost / demand
    } else {
        0.0
    }
}
