//! `spaclab clear` — settle one demand value under each mechanism and
//! write the full outcome per mechanism as JSON.

use std::path::Path;

use anyhow::{Context, Result};
use spaclab_core::{clear_pab, clear_pac, clear_spac, ClearingOutcome, Mechanism};

use crate::commands::{resolve_scenario, write_json};
use crate::config::{config_error, ExperimentConfig};

pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let scenario = resolve_scenario(config)?;
    let mechanisms = config.mechanisms()?;
    let demand = config.demand.value.ok_or_else(|| {
        config_error(
            "demand.value",
            "clear needs a single demand in MWh (set [demand] value or pass --demand)",
        )
    })?;

    let offers = scenario.offers_at_cost();
    let costs = scenario.cost_book();
    let capacity = scenario.total_capacity_mw();

    println!(
        "scenario {} — demand {demand} MWh (fleet capacity {capacity} MWh)",
        scenario.name()
    );
    println!(
        "{:<6} {:>14} {:>12} {:>14} {:>10} {:>10}",
        "rule", "cost €", "price €/MWh", "profit €", "nmcs", "nnmcs"
    );

    for mechanism in mechanisms {
        let outcome = clear_one(mechanism, &scenario, demand, &offers, &costs)?;
        let file = out_dir.join(format!("outcome_{}.json", mechanism.tag()));
        write_json(&file, &outcome)?;
        let fmt_price = |p: Option<f64>| match p {
            Some(v) => format!("{v:.2}"),
            None => "-".to_string(),
        };
        println!(
            "{:<6} {:>14.2} {:>12.2} {:>14.2} {:>10} {:>10}",
            mechanism.to_string(),
            outcome.total_cost,
            outcome.pun,
            outcome.total_profit(),
            fmt_price(outcome.nmcs_price),
            fmt_price(outcome.nnmcs_price),
        );
    }
    Ok(())
}

fn clear_one(
    mechanism: Mechanism,
    scenario: &spaclab_core::Scenario,
    demand: f64,
    offers: &[spaclab_core::SupplyOffer],
    costs: &spaclab_core::MarginalCostBook,
) -> Result<ClearingOutcome> {
    let clear = match mechanism {
        Mechanism::PayAsBid => clear_pab,
        Mechanism::PayAsClear => clear_pac,
        Mechanism::SegmentedPayAsClear => clear_spac,
    };
    clear(offers, demand, costs).with_context(|| {
        format!(
            "clearing {mechanism} at {demand} MWh against {} ({} MWh available)",
            scenario.name(),
            scenario.total_capacity_mw()
        )
    })
}
