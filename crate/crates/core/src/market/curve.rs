//! Merit-order supply curve: sorted offers with precomputed cumulative
//! capacities, shared by every clearing mechanism and by the grid-search
//! oracle (which needs cheap repeated price lookups).

use super::{sort_merit, SupplyOffer, EPS_QTY};
use crate::error::Result;

/// Offers in merit order plus the running cumulative capacity after each one.
#[derive(Debug, Clone)]
pub(crate) struct MeritCurve {
    pub offers: Vec<SupplyOffer>,
    /// `cums[i]` = total capacity of offers `0..=i` (MWh).
    pub cums: Vec<f64>,
}

impl MeritCurve {
    /// Builds the curve. Empty input is allowed here (a segment can be
    /// empty); whole-stack emptiness is rejected earlier by validation.
    pub fn build(offers: &[SupplyOffer]) -> Result<Self> {
        if offers.is_empty() {
            return Ok(Self {
                offers: Vec::new(),
                cums: Vec::new(),
            });
        }
        let sorted = sort_merit(offers)?;
        let mut cums = Vec::with_capacity(sorted.len());
        let mut running = 0.0;
        for offer in &sorted {
            running += offer.quantity_mw;
            cums.push(running);
        }
        Ok(Self {
            offers: sorted,
            cums,
        })
    }

    /// Total offered capacity (MWh).
    pub fn capacity(&self) -> f64 {
        self.cums.last().copied().unwrap_or(0.0)
    }

    /// Marginal price at dispatched quantity `x`: the offer price of the unit
    /// supplying the last increment. At an exact cumulative breakpoint the
    /// just-completed (cheaper) offer sets the price. `None` for `x ~ 0`.
    ///
    /// Callers must ensure `x <= capacity()` (up to tolerance).
    pub fn price_at(&self, x: f64) -> Option<f64> {
        if x <= EPS_QTY || self.offers.is_empty() {
            return None;
        }
        let idx = self.cums.partition_point(|&c| c < x - EPS_QTY);
        self.offers.get(idx.min(self.offers.len() - 1)).map(|o| o.price_eur_mwh)
    }

    /// Splits quantity `x` across offers in merit order. Returns
    /// `(index, dispatched)` pairs for offers with non-zero dispatch.
    pub fn dispatch(&self, x: f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        let mut prev_cum = 0.0;
        for (i, offer) in self.offers.iter().enumerate() {
            if prev_cum >= x - EPS_QTY {
                break;
            }
            let take = (x - prev_cum).min(offer.quantity_mw);
            if take > EPS_QTY {
                out.push((i, take));
            }
            prev_cum += offer.quantity_mw;
        }
        out
    }

    /// Uniform-price procurement cost of buying `x` from this curve:
    /// `x * price_at(x)`, zero for `x ~ 0`.
    pub fn uniform_cost(&self, x: f64) -> f64 {
        match self.price_at(x) {
            Some(price) => x * price,
            None => 0.0,
        }
    }
}
