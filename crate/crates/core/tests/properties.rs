//! Randomized invariants of the clearing mechanisms, the learning
//! primitives, and the load-curve utilities.

use proptest::prelude::*;

use spaclab_core::market::{
    clear_pab, clear_pac, clear_spac, clear_spac_oracle, ClearingOutcome, MarginalCostBook,
    Segment, SupplyOffer,
};
use spaclab_core::{ActionSpace, EpsilonSchedule, QTable, StateSpace};

const EPS: f64 = 1e-6;

/// One random offer in integer cents of €/MWh and hundredths of MW, so every
/// quantity and price sits exactly on the 0.01 grid used by the brute-force
/// reference solver.
#[derive(Debug, Clone)]
struct RawOffer {
    price_cents: u32,
    qty_cents: u32,
    nmcs: bool,
}

fn raw_offer() -> impl Strategy<Value = RawOffer> {
    (0u32..=20_000, 1u32..=6_000, any::<bool>()).prop_map(|(price_cents, qty_cents, nmcs)| {
        RawOffer {
            price_cents,
            qty_cents,
            nmcs,
        }
    })
}

/// A full random instance: 1..=50 offers plus a demand drawn as a whole
/// number of capacity hundredths, so it is feasible and grid-aligned.
#[derive(Debug, Clone)]
struct Instance {
    offers: Vec<SupplyOffer>,
    costs: MarginalCostBook,
    demand: f64,
}

fn instance() -> impl Strategy<Value = Instance> {
    prop::collection::vec(raw_offer(), 1..=50)
        .prop_flat_map(|raws| {
            let cap_cents: u64 = raws.iter().map(|r| r.qty_cents as u64).sum();
            (Just(raws), 1..=cap_cents)
        })
        .prop_map(|(raws, demand_cents)| {
            let mut offers = Vec::with_capacity(raws.len());
            let mut costs = MarginalCostBook::new();
            for (i, raw) in raws.iter().enumerate() {
                let unit_id = format!("u{i:02}");
                let price = raw.price_cents as f64 / 100.0;
                costs.insert(&unit_id, price);
                offers.push(SupplyOffer {
                    unit_id,
                    operator_id: format!("op{}", i % 5),
                    technology: format!("t{}", i % 3),
                    segment: if raw.nmcs { Segment::Nmcs } else { Segment::Nnmcs },
                    price_eur_mwh: price,
                    quantity_mw: raw.qty_cents as f64 / 100.0,
                });
            }
            Instance {
                offers,
                costs,
                demand: demand_cents as f64 / 100.0,
            }
        })
}

fn clear_all(inst: &Instance) -> (ClearingOutcome, ClearingOutcome, ClearingOutcome) {
    let pab = clear_pab(&inst.offers, inst.demand, &inst.costs).unwrap();
    let pac = clear_pac(&inst.offers, inst.demand, &inst.costs).unwrap();
    let spac = clear_spac(&inst.offers, inst.demand, &inst.costs).unwrap();
    (pab, pac, spac)
}

fn check_balance_and_bounds(inst: &Instance, outcome: &ClearingOutcome) {
    let dispatched: f64 = outcome.accepted.values().sum();
    prop_assert_ok(
        (dispatched - inst.demand).abs() <= EPS,
        &format!(
            "{}: dispatched {dispatched} != demand {}",
            outcome.mechanism, inst.demand
        ),
    );
    for offer in &inst.offers {
        let q = outcome.accepted[&offer.unit_id];
        prop_assert_ok(
            (-EPS..=offer.quantity_mw + EPS).contains(&q),
            &format!(
                "{}: unit {} dispatched {q} outside [0, {}]",
                outcome.mechanism, offer.unit_id, offer.quantity_mw
            ),
        );
        if q > EPS {
            prop_assert_ok(
                outcome.unit_payment_price.contains_key(&offer.unit_id),
                &format!("{}: dispatched {} has no price", outcome.mechanism, offer.unit_id),
            );
        }
    }
}

/// `prop_assert!` only works directly inside `proptest!`; helpers use panics,
/// which proptest also treats as failures (with minimization).
fn prop_assert_ok(cond: bool, msg: &str) {
    assert!(cond, "{msg}");
}

/// Every dispatched offer must be at least as cheap as every offer that was
/// left with spare capacity, within its own merit pool.
fn check_merit_order<'a>(
    outcome: &ClearingOutcome,
    pool: impl Iterator<Item = &'a SupplyOffer> + Clone,
) {
    let max_dispatched = pool
        .clone()
        .filter(|o| outcome.accepted[&o.unit_id] > EPS)
        .map(|o| o.price_eur_mwh)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_spare = pool
        .filter(|o| outcome.accepted[&o.unit_id] < o.quantity_mw - EPS)
        .map(|o| o.price_eur_mwh)
        .fold(f64::INFINITY, f64::min);
    prop_assert_ok(
        max_dispatched <= min_spare + 1e-9,
        &format!(
            "{}: dispatched at {max_dispatched} while {min_spare} had spare capacity",
            outcome.mechanism
        ),
    );
}

proptest! {
    #[test]
    fn clearing_balances_energy_and_respects_capacity(inst in instance()) {
        let (pab, pac, spac) = clear_all(&inst);
        for outcome in [&pab, &pac, &spac] {
            check_balance_and_bounds(&inst, outcome);
        }
    }

    #[test]
    fn mechanism_costs_are_ordered(inst in instance()) {
        let (pab, pac, spac) = clear_all(&inst);
        prop_assert!(
            pab.total_cost <= spac.total_cost + EPS,
            "pay-as-bid {} above segmented {}",
            pab.total_cost,
            spac.total_cost
        );
        prop_assert!(
            spac.total_cost <= pac.total_cost + EPS,
            "segmented {} above uniform {}",
            spac.total_cost,
            pac.total_cost
        );
    }

    #[test]
    fn dispatch_follows_merit_order(inst in instance()) {
        let (pab, pac, spac) = clear_all(&inst);
        check_merit_order(&pab, inst.offers.iter());
        check_merit_order(&pac, inst.offers.iter());
        // The segmented market runs one merit order per segment.
        for segment in [Segment::Nmcs, Segment::Nnmcs] {
            check_merit_order(&spac, inst.offers.iter().filter(move |o| o.segment == segment));
        }
    }

    #[test]
    fn truthful_offers_leave_no_discriminatory_profit(inst in instance()) {
        // The generator prices every offer at marginal cost, so pay-as-bid
        // profit is identically zero and uniform settlements can only hand
        // out non-negative inframarginal rent.
        let (pab, pac, spac) = clear_all(&inst);
        for profit in pab.operator_profit.values() {
            prop_assert!(profit.abs() <= 1e-9, "pay-as-bid profit {profit}");
        }
        for outcome in [&pac, &spac] {
            for profit in outcome.operator_profit.values() {
                prop_assert!(*profit >= -1e-9, "{}: negative rent {profit}", outcome.mechanism);
            }
        }
    }

    #[test]
    fn clearing_is_deterministic(inst in instance()) {
        let first = clear_all(&inst);
        let second = clear_all(&inst);
        prop_assert_eq!(first.0, second.0);
        prop_assert_eq!(first.1, second.1);
        prop_assert_eq!(first.2, second.2);
    }

    #[test]
    fn uniform_price_is_the_most_expensive_dispatched_offer(inst in instance()) {
        let pac = clear_pac(&inst.offers, inst.demand, &inst.costs).unwrap();
        let max_dispatched = inst
            .offers
            .iter()
            .filter(|o| pac.accepted[&o.unit_id] > EPS)
            .map(|o| o.price_eur_mwh)
            .fold(f64::NEG_INFINITY, f64::max);
        let price = pac.nnmcs_price.unwrap();
        prop_assert!((price - max_dispatched).abs() <= 1e-9);
    }
}

// The grid reference is much slower than the exact solver, so this block
// runs fewer cases.
proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_split_matches_grid_reference_on_aligned_instances(inst in instance()) {
        let exact = clear_spac(&inst.offers, inst.demand, &inst.costs).unwrap();
        let grid = clear_spac_oracle(&inst.offers, inst.demand, &inst.costs, 0.01).unwrap();
        // The grid can never beat the exact enumeration...
        prop_assert!(exact.total_cost <= grid.total_cost + EPS);
        // ...and on 0.01-aligned instances it hits every breakpoint, so the
        // two agree to float precision.
        prop_assert!(
            (exact.total_cost - grid.total_cost).abs() <= EPS,
            "exact {} vs grid {}",
            exact.total_cost,
            grid.total_cost
        );
    }
}

// ---------------------------------------------------------------------------
// Learning primitives.

proptest! {
    #[test]
    fn q_value_is_the_running_mean(rewards in prop::collection::vec(-1e6..1e6f64, 1..200)) {
        let mut table = QTable::new(1, 1);
        for &r in &rewards {
            table.update(0, 0, r).unwrap();
        }
        let mean = rewards.iter().sum::<f64>() / rewards.len() as f64;
        let q = table.q_row(0).unwrap()[0];
        prop_assert!(
            (q - mean).abs() <= 1e-9 * mean.abs().max(1.0),
            "q {q} vs running mean {mean}"
        );
    }

    #[test]
    fn action_encoding_round_trips(
        n_techs in 1usize..=4,
        grid_len in 1usize..=4,
    ) {
        let technologies: Vec<String> = (0..n_techs).map(|i| format!("t{i}")).collect();
        let grid: Vec<f64> = (0..grid_len).map(|i| i as f64 * 0.25).collect();
        let space = ActionSpace::new(technologies, grid).unwrap();
        prop_assert_eq!(space.len(), grid_len.pow(n_techs as u32));
        for action in 0..space.len() {
            let markups = space.markups(action).unwrap();
            prop_assert_eq!(space.index_of(&markups), Some(action));
        }
    }

    #[test]
    fn nearest_state_is_the_closest_level(
        total_capacity in 100.0..1e5f64,
        n_states in 2usize..=50,
        frac in 0.0..1.5f64,
    ) {
        let space = StateSpace::new(total_capacity, n_states).unwrap();
        let demand = total_capacity * frac;
        let idx = space.nearest_index(demand);
        let chosen = (space.levels()[idx] - demand).abs();
        for (i, &level) in space.levels().iter().enumerate() {
            let dist = (level - demand).abs();
            // No level is strictly closer, and an equally close one can only
            // sit at a higher index (ties resolve low).
            prop_assert!(chosen <= dist || i > idx);
        }
    }

    #[test]
    fn exploration_rate_decays_within_bounds(t in 0u32..=2000) {
        let schedule = EpsilonSchedule::new(1.0, 0.05, 2000).unwrap();
        let eps = schedule.value_at(t).unwrap();
        prop_assert!((0.05..=1.0).contains(&eps));
        if t > 0 {
            prop_assert!(eps <= schedule.value_at(t - 1).unwrap());
        }
    }
}

// ---------------------------------------------------------------------------
// Load-curve scaling.

proptest! {
    #[test]
    fn affine_scaling_preserves_order_and_hits_extremes(
        demands in prop::collection::vec(0.0..5e4f64, 2..100),
        lo in 100.0..1000.0f64,
        span in 1.0..5000.0f64,
    ) {
        use chrono::NaiveDate;
        use spaclab_core::sim::{scale_load_curve, LoadCurve};

        // Force a non-constant curve so the affine map is well-defined.
        let mut demands = demands;
        let last = demands.len() - 1;
        demands[last] = demands[0] + 7.5e4;

        let t0 = NaiveDate::from_ymd_opt(2030, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let samples: Vec<_> = demands
            .iter()
            .enumerate()
            .map(|(i, &d)| (t0 + chrono::Duration::minutes(15 * i as i64), d))
            .collect();
        let curve = LoadCurve::new(samples).unwrap();
        let scaled = scale_load_curve(&curve, lo, lo + span).unwrap();

        prop_assert!((scaled.min_mw() - lo).abs() <= 1e-9 * lo);
        prop_assert!((scaled.max_mw() - (lo + span)).abs() <= 1e-9 * (lo + span));
        for (orig, new) in curve.samples().iter().zip(scaled.samples()) {
            prop_assert_eq!(orig.0, new.0);
        }
        for w in 0..curve.len() - 1 {
            let (a, b) = (curve.samples()[w].1, curve.samples()[w + 1].1);
            let (sa, sb) = (scaled.samples()[w].1, scaled.samples()[w + 1].1);
            // Monotone map: order of any two samples is preserved.
            if a < b {
                prop_assert!(sa <= sb + 1e-9);
            } else if a > b {
                prop_assert!(sa >= sb - 1e-9);
            }
        }
    }
}
