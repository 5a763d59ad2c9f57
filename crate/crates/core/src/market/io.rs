//! On-disk format for offer stacks.
//!
//! One row per offer:
//!
//! ```csv
//! unit_id,operator_id,technology,segment,price_eur_mwh,quantity_mw
//! OpA-PV,OpA,PV,NMCS,4.2,120
//! ```
//!
//! `segment` is `NMCS` or `NNMCS` (case-insensitive on read).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Segment, SupplyOffer};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct OfferRow {
    unit_id: String,
    operator_id: String,
    technology: String,
    segment: String,
    price_eur_mwh: f64,
    quantity_mw: f64,
}

/// Reads a full offer stack. The header must carry exactly the documented
/// column names; any unreadable row is a hard error (offer stacks are small,
/// curated inputs — unlike offer *histories*, which tolerate bad rows).
pub fn read_offer_stack_csv(path: impl AsRef<Path>) -> Result<Vec<SupplyOffer>> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::CsvSchema {
        path: Some(display.clone()),
        detail: e.to_string(),
    })?;
    let mut offers = Vec::new();
    for row in reader.deserialize::<OfferRow>() {
        let row = row.map_err(|e| Error::CsvSchema {
            path: Some(display.clone()),
            detail: e.to_string(),
        })?;
        let segment: Segment = row.segment.parse()?;
        offers.push(SupplyOffer {
            unit_id: row.unit_id,
            operator_id: row.operator_id,
            technology: row.technology,
            segment,
            price_eur_mwh: row.price_eur_mwh,
            quantity_mw: row.quantity_mw,
        });
    }
    if offers.is_empty() {
        return Err(Error::EmptyInput {
            what: format!("offer stack {display}"),
        });
    }
    Ok(offers)
}

/// Writes an offer stack in the same format `read_offer_stack_csv` accepts.
pub fn write_offer_stack_csv(path: impl AsRef<Path>, offers: &[SupplyOffer]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    for offer in offers {
        writer.serialize(OfferRow {
            unit_id: offer.unit_id.clone(),
            operator_id: offer.operator_id.clone(),
            technology: offer.technology.clone(),
            segment: offer.segment.to_string(),
            price_eur_mwh: offer.price_eur_mwh,
            quantity_mw: offer.quantity_mw,
        })?;
    }
    writer.flush()?;
    Ok(())
}
