//! Fixture builders shared by the criterion benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spaclab_core::{MarginalCostBook, Segment, SupplyOffer};

/// A reproducible random offer stack: `n_offers` units with prices on a
/// cent grid in 0..=200 €/MWh and quantities up to 60 MW, plus a matching
/// cost book (costs equal to offered prices) and a demand at 60% of the
/// stack's capacity.
pub fn random_stack(seed: u64, n_offers: usize) -> (Vec<SupplyOffer>, MarginalCostBook, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut offers = Vec::with_capacity(n_offers);
    let mut capacity = 0.0;
    for i in 0..n_offers {
        let price = rng.random_range(0..=20_000) as f64 / 100.0;
        let quantity = rng.random_range(1..=6_000) as f64 / 100.0;
        capacity += quantity;
        offers.push(SupplyOffer {
            unit_id: format!("u{i}"),
            operator_id: format!("op{}", i % 3),
            technology: "mixed".into(),
            segment: if price <= 110.0 { Segment::Nmcs } else { Segment::Nnmcs },
            price_eur_mwh: price,
            quantity_mw: quantity,
        });
    }
    let costs = offers
        .iter()
        .map(|o| (o.unit_id.clone(), o.price_eur_mwh))
        .collect();
    (offers, costs, 0.6 * capacity)
}
