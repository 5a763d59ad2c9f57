//! Clearing a load curve interval by interval.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Datelike, NaiveDateTime};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{LoadCurve, Strategy};
use crate::agents::{nearest_state_policy, PolicySet};
use crate::error::{Error, Result};
use crate::market::{
    clear_pab, clear_pac, clear_spac, ClearingOutcome, MarginalCostBook, Mechanism,
};
use crate::scenarios::Scenario;
use crate::timeparse;

/// Per-interval results of one (mechanism, strategy) combination, plus its
/// aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSeries {
    pub mechanism: Mechanism,
    pub strategy: Strategy,
    /// Unified purchase price per interval (€/MWh).
    pub pun: Vec<f64>,
    /// Buyer expenditure per interval (€).
    pub cost: Vec<f64>,
    /// Total producer profit per interval (€).
    pub profit: Vec<f64>,
    /// Whole-run profit per operator (€).
    pub operator_profit: BTreeMap<String, f64>,
    /// Intervals where the segment split tied and the NMCS-heavy one was
    /// kept.
    pub tie_split_intervals: usize,
    /// Intervals where the NMCS segment cleared above the NNMCS segment.
    pub inverted_price_intervals: usize,
}

impl MarketSeries {
    fn new(mechanism: Mechanism, strategy: Strategy, capacity: usize) -> Self {
        Self {
            mechanism,
            strategy,
            pun: Vec::with_capacity(capacity),
            cost: Vec::with_capacity(capacity),
            profit: Vec::with_capacity(capacity),
            operator_profit: BTreeMap::new(),
            tie_split_intervals: 0,
            inverted_price_intervals: 0,
        }
    }

    fn push(&mut self, outcome: &ClearingOutcome) {
        self.pun.push(outcome.pun);
        self.cost.push(outcome.total_cost);
        self.profit.push(outcome.total_profit());
        for (op, profit) in &outcome.operator_profit {
            *self.operator_profit.entry(op.clone()).or_insert(0.0) += profit;
        }
        self.tie_split_intervals += outcome.flags.tie_split as usize;
        self.inverted_price_intervals += outcome.flags.nmcs_price_above_nnmcs as usize;
    }

    pub fn len(&self) -> usize {
        self.pun.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pun.is_empty()
    }

    /// Whole-run buyer expenditure (€).
    pub fn total_cost(&self) -> f64 {
        self.cost.iter().sum()
    }

    /// Whole-run producer profit (€).
    pub fn total_profit(&self) -> f64 {
        self.profit.iter().sum()
    }
}

/// All series of one simulation run over one load curve. For persistence
/// use [`RunResult::summary`] (JSON-friendly) and
/// [`write_intervals_csv`]; the tuple-keyed series map itself does not
/// serialize to JSON.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub scenario_name: String,
    pub timestamps: Vec<NaiveDateTime>,
    /// Demand per interval (MWh).
    pub demand_mwh: Vec<f64>,
    pub series: BTreeMap<(Mechanism, Strategy), MarketSeries>,
}

impl RunResult {
    pub fn series_for(&self, mechanism: Mechanism, strategy: Strategy) -> Option<&MarketSeries> {
        self.series.get(&(mechanism, strategy))
    }

    pub fn intervals(&self) -> usize {
        self.timestamps.len()
    }

    /// Mean PUN per calendar month as `(year, month, mean)`, in time order.
    pub fn monthly_pun(&self, mechanism: Mechanism, strategy: Strategy) -> Vec<(i32, u32, f64)> {
        let Some(series) = self.series_for(mechanism, strategy) else {
            return Vec::new();
        };
        let mut order: Vec<(i32, u32)> = Vec::new();
        let mut sums: BTreeMap<(i32, u32), (f64, usize)> = BTreeMap::new();
        for (ts, pun) in self.timestamps.iter().zip(&series.pun) {
            let key = (ts.year(), ts.month());
            if !sums.contains_key(&key) {
                order.push(key);
            }
            let slot = sums.entry(key).or_insert((0.0, 0));
            slot.0 += pun;
            slot.1 += 1;
        }
        order
            .into_iter()
            .map(|key| {
                let (sum, n) = sums[&key];
                (key.0, key.1, sum / n as f64)
            })
            .collect()
    }

    /// Aggregate view used for the JSON summary file.
    pub fn summary(&self) -> RunSummary {
        RunSummary {
            scenario: self.scenario_name.clone(),
            intervals: self.intervals(),
            first_interval: self.timestamps.first().copied(),
            last_interval: self.timestamps.last().copied(),
            series: self
                .series
                .values()
                .map(|s| SeriesSummary {
                    mechanism: s.mechanism,
                    strategy: s.strategy,
                    total_cost: s.total_cost(),
                    total_profit: s.total_profit(),
                    mean_pun: if s.is_empty() {
                        0.0
                    } else {
                        s.pun.iter().sum::<f64>() / s.len() as f64
                    },
                    operator_profit: s.operator_profit.clone(),
                    tie_split_intervals: s.tie_split_intervals,
                    inverted_price_intervals: s.inverted_price_intervals,
                    monthly_pun: self
                        .monthly_pun(s.mechanism, s.strategy)
                        .into_iter()
                        .map(|(y, m, pun)| MonthlyPun {
                            year: y,
                            month: m,
                            mean_pun: pun,
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

/// Serializable run aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub intervals: usize,
    pub first_interval: Option<NaiveDateTime>,
    pub last_interval: Option<NaiveDateTime>,
    pub series: Vec<SeriesSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub mechanism: Mechanism,
    pub strategy: Strategy,
    pub total_cost: f64,
    pub total_profit: f64,
    pub mean_pun: f64,
    pub operator_profit: BTreeMap<String, f64>,
    pub tie_split_intervals: usize,
    pub inverted_price_intervals: usize,
    pub monthly_pun: Vec<MonthlyPun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyPun {
    pub year: i32,
    pub month: u32,
    pub mean_pun: f64,
}

fn clear_by(
    mechanism: Mechanism,
    offers: &[crate::market::SupplyOffer],
    demand: f64,
    costs: &MarginalCostBook,
) -> Result<ClearingOutcome> {
    match mechanism {
        Mechanism::PayAsBid => clear_pab(offers, demand, costs),
        Mechanism::PayAsClear => clear_pac(offers, demand, costs),
        Mechanism::SegmentedPayAsClear => clear_spac(offers, demand, costs),
    }
}

/// Runs the simulation engine over a curve.
///
/// Intervals are independent clearing problems and run in parallel; results
/// are folded back in time order, so the output is identical regardless of
/// thread count. An interval that cannot clear aborts the run, wrapped with
/// its timestamp.
fn simulate(
    scenario: &Scenario,
    curve: &LoadCurve,
    mechanisms: &[Mechanism],
    strategies: &[Strategy],
    policies: Option<&PolicySet>,
) -> Result<RunResult> {
    if curve.is_empty() {
        return Err(Error::EmptyInput {
            what: "load curve".into(),
        });
    }
    if mechanisms.is_empty() || strategies.is_empty() {
        return Err(Error::EmptyInput {
            what: "mechanism/strategy selection".into(),
        });
    }
    let operators = scenario.operators();
    if strategies.contains(&Strategy::Policy) {
        let policies = policies.ok_or_else(|| Error::PolicyMismatch {
            detail: "policy strategy requested but no policies supplied".into(),
        })?;
        for &mechanism in mechanisms {
            policies.require_operators(mechanism, &operators)?;
            for op in &operators {
                let policy = policies.get(mechanism, op).expect("presence checked above");
                let expected = scenario.technologies_of(op);
                if policy.technologies != expected {
                    return Err(Error::PolicyMismatch {
                        detail: format!(
                            "policy for {op} under {mechanism} covers technologies {:?}, \
                             scenario has {:?}",
                            policy.technologies, expected
                        ),
                    });
                }
            }
        }
    }

    let costs = scenario.cost_book();
    let marginal_offers = scenario.offers_at_cost();

    // One work item per interval; each clears every mechanism/strategy pair.
    let per_interval: Vec<Vec<ClearingOutcome>> = curve
        .samples()
        .par_iter()
        .map(|&(ts, demand)| {
            let mut outcomes = Vec::with_capacity(mechanisms.len() * strategies.len());
            for &mechanism in mechanisms {
                for &strategy in strategies {
                    let outcome = match strategy {
                        Strategy::Marginal => clear_by(mechanism, &marginal_offers, demand, &costs),
                        Strategy::Policy => {
                            let policies =
                                policies.expect("checked above that policies are present");
                            let mut markups: BTreeMap<(&str, &str), f64> = BTreeMap::new();
                            for op in &operators {
                                let policy = policies
                                    .get(mechanism, op)
                                    .expect("checked above that all operators are covered");
                                let (_, tech_markups) = nearest_state_policy(policy, demand)?;
                                for (tech, markup) in
                                    policy.technologies.iter().zip(tech_markups)
                                {
                                    markups.insert((op.as_str(), tech.as_str()), markup);
                                }
                            }
                            let offers = scenario.offers_with(&|unit| {
                                markups
                                    .get(&(unit.operator_id.as_str(), unit.technology.as_str()))
                                    .copied()
                                    .unwrap_or(0.0)
                            })?;
                            clear_by(mechanism, &offers, demand, &costs)
                        }
                    };
                    outcomes.push(outcome.map_err(|e| Error::InfeasibleInterval {
                        timestamp: ts.format(timeparse::ISO_FORMAT).to_string(),
                        source: Box::new(e),
                    })?);
                }
            }
            Ok(outcomes)
        })
        .collect::<Result<_>>()?;

    let mut series: BTreeMap<(Mechanism, Strategy), MarketSeries> = BTreeMap::new();
    for &mechanism in mechanisms {
        for &strategy in strategies {
            series.insert(
                (mechanism, strategy),
                MarketSeries::new(mechanism, strategy, curve.len()),
            );
        }
    }
    for outcomes in &per_interval {
        let mut it = outcomes.iter();
        for &mechanism in mechanisms {
            for &strategy in strategies {
                let outcome = it.next().expect("one outcome per pair");
                series
                    .get_mut(&(mechanism, strategy))
                    .expect("series pre-created")
                    .push(outcome);
            }
        }
    }

    Ok(RunResult {
        scenario_name: scenario.name().to_string(),
        timestamps: curve.samples().iter().map(|&(ts, _)| ts).collect(),
        demand_mwh: curve.samples().iter().map(|&(_, d)| d).collect(),
        series,
    })
}

/// Simulates a single day. All samples must share one calendar date — a
/// guard against accidentally feeding a year-long curve into a typical-day
/// analysis.
pub fn simulate_day(
    scenario: &Scenario,
    curve: &LoadCurve,
    mechanisms: &[Mechanism],
    strategies: &[Strategy],
    policies: Option<&PolicySet>,
) -> Result<RunResult> {
    let first_date = curve
        .samples()
        .first()
        .map(|(ts, _)| ts.date())
        .ok_or_else(|| Error::EmptyInput {
            what: "load curve".into(),
        })?;
    if curve.samples().iter().any(|(ts, _)| ts.date() != first_date) {
        return Err(Error::InvalidData {
            what: "day curve".into(),
            detail: "samples span more than one calendar date".into(),
        });
    }
    simulate(scenario, curve, mechanisms, strategies, policies)
}

/// Simulates an arbitrary span (typically a whole year). Monthly PUN
/// averages are available from the result.
pub fn simulate_year(
    scenario: &Scenario,
    curve: &LoadCurve,
    mechanisms: &[Mechanism],
    strategies: &[Strategy],
    policies: Option<&PolicySet>,
) -> Result<RunResult> {
    simulate(scenario, curve, mechanisms, strategies, policies)
}

/// Writes the per-interval results:
/// `t,mechanism,strategy,pun,cost,profit_total` — one row per interval per
/// series, grouped by series, time-ordered within each.
pub fn write_intervals_csv(path: impl AsRef<Path>, result: &RunResult) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    writer.write_record(["t", "mechanism", "strategy", "pun", "cost", "profit_total"])?;
    for series in result.series.values() {
        for (i, ts) in result.timestamps.iter().enumerate() {
            writer.write_record([
                ts.format(timeparse::ISO_FORMAT).to_string(),
                series.mechanism.tag().to_string(),
                series.strategy.to_string(),
                series.pun[i].to_string(),
                series.cost[i].to_string(),
                series.profit[i].to_string(),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::build_pniec_scenario;
    use chrono::NaiveDate;

    fn mini_curve() -> LoadCurve {
        let date = NaiveDate::from_ymd_opt(2030, 7, 1).unwrap();
        LoadCurve::new(vec![
            (date.and_hms_opt(9, 0, 0).unwrap(), 600.0),
            (date.and_hms_opt(9, 15, 0).unwrap(), 1000.0),
            (date.and_hms_opt(9, 30, 0).unwrap(), 1500.0),
        ])
        .unwrap()
    }

    #[test]
    fn truthful_day_reproduces_single_clearing_results() {
        let scenario = build_pniec_scenario();
        let result = simulate_day(
            &scenario,
            &mini_curve(),
            &Mechanism::ALL,
            &[Strategy::Marginal],
            None,
        )
        .unwrap();
        assert_eq!(result.intervals(), 3);
        let pab = result
            .series_for(Mechanism::PayAsBid, Strategy::Marginal)
            .unwrap();
        let pac = result
            .series_for(Mechanism::PayAsClear, Strategy::Marginal)
            .unwrap();
        let spac = result
            .series_for(Mechanism::SegmentedPayAsClear, Strategy::Marginal)
            .unwrap();
        // The 1000 MWh interval matches the hand-checked single clearing.
        assert!((pab.pun[1] - 20.588).abs() < 1e-9);
        assert!((pac.pun[1] - 69.0).abs() < 1e-9);
        assert!((spac.pun[1] - 29.8).abs() < 1e-9);
        // Aggregates are the interval sums.
        assert!((pab.total_cost() - pab.cost.iter().sum::<f64>()).abs() < 1e-9);
        let op_sum: f64 = pac.operator_profit.values().sum();
        assert!((op_sum - pac.total_profit()).abs() < 1e-6);
    }

    #[test]
    fn day_simulation_rejects_multi_date_curves() {
        let scenario = build_pniec_scenario();
        let d1 = NaiveDate::from_ymd_opt(2030, 7, 1).unwrap();
        let d2 = NaiveDate::from_ymd_opt(2030, 7, 2).unwrap();
        let curve = LoadCurve::new(vec![
            (d1.and_hms_opt(23, 45, 0).unwrap(), 600.0),
            (d2.and_hms_opt(0, 0, 0).unwrap(), 620.0),
        ])
        .unwrap();
        assert!(simulate_day(&scenario, &curve, &Mechanism::ALL, &[Strategy::Marginal], None).is_err());
        // The year entry point takes the same curve happily.
        assert!(
            simulate_year(&scenario, &curve, &Mechanism::ALL, &[Strategy::Marginal], None).is_ok()
        );
    }

    #[test]
    fn infeasible_interval_reports_its_timestamp() {
        let scenario = build_pniec_scenario();
        let date = NaiveDate::from_ymd_opt(2030, 7, 1).unwrap();
        let curve = LoadCurve::new(vec![
            (date.and_hms_opt(9, 0, 0).unwrap(), 600.0),
            (date.and_hms_opt(9, 15, 0).unwrap(), 2500.0),
        ])
        .unwrap();
        let err = simulate_day(&scenario, &curve, &[Mechanism::PayAsClear], &[Strategy::Marginal], None)
            .unwrap_err();
        match err {
            Error::InfeasibleInterval { timestamp, source } => {
                assert_eq!(timestamp, "2030-07-01T09:15:00");
                assert!(matches!(*source, Error::InfeasibleDemand { .. }));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn policy_strategy_requires_full_policy_coverage() {
        let scenario = build_pniec_scenario();
        let err = simulate_day(
            &scenario,
            &mini_curve(),
            &[Mechanism::PayAsClear],
            &[Strategy::Policy],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::PolicyMismatch { .. }));

        let mut policies = crate::agents::PolicySet::new();
        policies
            .insert(crate::agents::Policy {
                mechanism: Mechanism::PayAsClear,
                operator_id: "OpA".into(),
                states: vec![500.0, 1600.0],
                technologies: scenario.technologies_of("OpA"),
                markup_grid: vec![0.0, 0.1],
                actions: vec![0, 0],
                cold: vec![false, false],
            })
            .unwrap();
        // OpB still missing.
        let err = simulate_day(
            &scenario,
            &mini_curve(),
            &[Mechanism::PayAsClear],
            &[Strategy::Policy],
            Some(&policies),
        )
        .unwrap_err();
        assert!(matches!(err, Error::PolicyMismatch { .. }));
    }

    #[test]
    fn zero_markup_policies_match_marginal_bidding() {
        let scenario = build_pniec_scenario();
        let mut policies = crate::agents::PolicySet::new();
        for op in scenario.operators() {
            policies
                .insert(crate::agents::Policy {
                    mechanism: Mechanism::SegmentedPayAsClear,
                    operator_id: op.clone(),
                    states: vec![500.0, 1600.0],
                    technologies: scenario.technologies_of(&op),
                    markup_grid: vec![0.0],
                    actions: vec![0, 0],
                    cold: vec![false, false],
                })
                .unwrap();
        }
        let result = simulate_day(
            &scenario,
            &mini_curve(),
            &[Mechanism::SegmentedPayAsClear],
            &[Strategy::Marginal, Strategy::Policy],
            Some(&policies),
        )
        .unwrap();
        let marginal = result
            .series_for(Mechanism::SegmentedPayAsClear, Strategy::Marginal)
            .unwrap();
        let policy = result
            .series_for(Mechanism::SegmentedPayAsClear, Strategy::Policy)
            .unwrap();
        assert_eq!(marginal.pun, policy.pun);
        assert_eq!(marginal.cost, policy.cost);
    }

    #[test]
    fn monthly_pun_averages_follow_the_calendar() {
        let scenario = build_pniec_scenario();
        let jan = NaiveDate::from_ymd_opt(2030, 1, 31).unwrap();
        let feb = NaiveDate::from_ymd_opt(2030, 2, 1).unwrap();
        let curve = LoadCurve::new(vec![
            (jan.and_hms_opt(23, 30, 0).unwrap(), 600.0),
            (jan.and_hms_opt(23, 45, 0).unwrap(), 1000.0),
            (feb.and_hms_opt(0, 0, 0).unwrap(), 1000.0),
        ])
        .unwrap();
        let result = simulate_year(
            &scenario,
            &curve,
            &[Mechanism::PayAsClear],
            &[Strategy::Marginal],
            None,
        )
        .unwrap();
        let monthly = result.monthly_pun(Mechanism::PayAsClear, Strategy::Marginal);
        assert_eq!(monthly.len(), 2);
        assert_eq!((monthly[0].0, monthly[0].1), (2030, 1));
        // January: PUN(600)=12, PUN(1000)=69 -> mean 40.5.
        assert!((monthly[0].2 - 40.5).abs() < 1e-9);
        assert!((monthly[1].2 - 69.0).abs() < 1e-9);
    }
}
