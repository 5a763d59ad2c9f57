//! Joint training of all operators' markup policies.
//!
//! Demand levels are independent learning problems, so they are trained in
//! parallel. Reproducibility across thread counts comes from deriving one
//! RNG seed per demand level from `(master seed, level index, mechanism)`
//! and assembling results in level order — the schedule never influences the
//! random streams.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::qtable::{extract_policy, select_action, Policy, QTable};
use super::{ActionSpace, StateSpace, TrainingConfig};
use crate::error::{Error, Result};
use crate::market::{clear_pab, clear_pac, clear_spac, ClearingOutcome, MarginalCostBook,
    Mechanism, SupplyOffer};
use crate::scenarios::Scenario;

/// One clearing round during training, as recorded for convergence
/// monitoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: u32,
    pub epsilon: f64,
    pub pun: f64,
    pub total_cost: f64,
    /// Action index each operator chose this episode.
    pub actions: BTreeMap<String, usize>,
    /// Profit each operator earned this episode.
    pub rewards: BTreeMap<String, f64>,
}

/// Training output for a single demand level: one single-state table per
/// operator, plus the episode log when requested.
#[derive(Debug, Clone)]
pub struct StateTrainingSlice {
    pub state_index: usize,
    pub demand_mw: f64,
    pub per_operator: BTreeMap<String, QTable>,
    pub episode_log: Option<Vec<EpisodeRecord>>,
}

/// Everything a finished training run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingResult {
    pub mechanism: Mechanism,
    pub states: StateSpace,
    pub action_spaces: BTreeMap<String, ActionSpace>,
    pub tables: BTreeMap<String, QTable>,
    /// `(state index, per-episode records)` for the monitored demand level.
    pub episode_log: Option<(usize, Vec<EpisodeRecord>)>,
}

impl TrainingResult {
    /// Greedy policies for every operator.
    pub fn policies(&self) -> Result<Vec<Policy>> {
        self.tables
            .iter()
            .map(|(op, table)| {
                extract_policy(
                    table,
                    &self.states,
                    &self.action_spaces[op],
                    self.mechanism,
                    op,
                )
            })
            .collect()
    }
}

/// Mixes a 64-bit value; the finalizer from the splitmix64 generator.
fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one demand level's RNG. Distinct levels, mechanisms, and master
/// seeds all land in uncorrelated streams.
pub fn derive_state_seed(master_seed: u64, state_index: usize, mechanism: Mechanism) -> u64 {
    let tag = match mechanism {
        Mechanism::PayAsBid => 1u64,
        Mechanism::PayAsClear => 2,
        Mechanism::SegmentedPayAsClear => 3,
    };
    let h = mix64(master_seed);
    let h = mix64(h ^ state_index as u64);
    mix64(h ^ tag)
}

fn clear_by(
    mechanism: Mechanism,
    offers: &[SupplyOffer],
    demand_mwh: f64,
    costs: &MarginalCostBook,
) -> Result<ClearingOutcome> {
    match mechanism {
        Mechanism::PayAsBid => clear_pab(offers, demand_mwh, costs),
        Mechanism::PayAsClear => clear_pac(offers, demand_mwh, costs),
        Mechanism::SegmentedPayAsClear => clear_spac(offers, demand_mwh, costs),
    }
}

/// Trains every operator jointly on a single demand level.
///
/// Episodes run `1..=config.episodes`; each episode every operator draws an
/// ε-greedy action from its own table (shared ε, private RNG draws from the
/// level's stream, in operator order), the market clears once under
/// `config.mechanism`, and each operator's cleared profit updates its table.
pub fn train_state(
    scenario: &Scenario,
    config: &TrainingConfig,
    state_index: usize,
    demand_mw: f64,
    with_log: bool,
) -> Result<StateTrainingSlice> {
    let operators = scenario.operators();
    let schedule = config.schedule()?;
    let costs = scenario.cost_book();
    let grid = config.grid();

    let mut spaces = Vec::with_capacity(operators.len());
    let mut tables = Vec::with_capacity(operators.len());
    for op in &operators {
        let space = ActionSpace::new(scenario.technologies_of(op), grid.clone())?;
        tables.push(QTable::new(1, space.len()));
        spaces.push(space);
    }

    let mut rng =
        ChaCha8Rng::seed_from_u64(derive_state_seed(config.master_seed, state_index, config.mechanism));
    let mut log = with_log.then(|| Vec::with_capacity(config.episodes as usize));

    for episode in 1..=config.episodes {
        let epsilon = schedule.value_at(episode)?;

        let mut chosen = Vec::with_capacity(operators.len());
        for table in &tables {
            chosen.push(select_action(table, 0, epsilon, &mut rng)?);
        }

        let offers = scenario.offers_with(&|unit| {
            let op_idx = operators
                .iter()
                .position(|op| *op == unit.operator_id)
                .expect("unit operator is always in the operator list");
            spaces[op_idx]
                .markup_for(chosen[op_idx], &unit.technology)
                .expect("scenario technologies define the action space")
        })?;
        let outcome = clear_by(config.mechanism, &offers, demand_mw, &costs)?;

        let mut rewards = BTreeMap::new();
        for (idx, op) in operators.iter().enumerate() {
            let reward = outcome.operator_profit.get(op).copied().unwrap_or(0.0);
            tables[idx].update(0, chosen[idx], reward)?;
            rewards.insert(op.clone(), reward);
        }

        if let Some(log) = log.as_mut() {
            log.push(EpisodeRecord {
                episode,
                epsilon,
                pun: outcome.pun,
                total_cost: outcome.total_cost,
                actions: operators
                    .iter()
                    .zip(&chosen)
                    .map(|(op, &a)| (op.clone(), a))
                    .collect(),
                rewards,
            });
        }
    }

    Ok(StateTrainingSlice {
        state_index,
        demand_mw,
        per_operator: operators.into_iter().zip(tables).collect(),
        episode_log: log,
    })
}

/// Trains all demand levels of `states` (in parallel) and assembles full
/// per-operator tables.
///
/// `log_state` selects one demand level whose episodes are recorded for
/// convergence inspection.
pub fn train_all_states(
    scenario: &Scenario,
    config: &TrainingConfig,
    states: &StateSpace,
    log_state: Option<usize>,
) -> Result<TrainingResult> {
    if let Some(idx) = log_state {
        if idx >= states.len() {
            return Err(Error::IndexOutOfBounds {
                what: "state",
                index: idx,
                size: states.len(),
            });
        }
    }

    let slices: Vec<StateTrainingSlice> = states
        .levels()
        .par_iter()
        .enumerate()
        .map(|(idx, &demand)| train_state(scenario, config, idx, demand, log_state == Some(idx)))
        .collect::<Result<_>>()?;

    let operators = scenario.operators();
    let grid = config.grid();
    let mut action_spaces = BTreeMap::new();
    let mut tables = BTreeMap::new();
    for op in &operators {
        let space = ActionSpace::new(scenario.technologies_of(op), grid.clone())?;
        tables.insert(op.clone(), QTable::new(states.len(), space.len()));
        action_spaces.insert(op.clone(), space);
    }

    let mut episode_log = None;
    for slice in slices {
        for (op, single) in slice.per_operator {
            let (q, counts) = single.into_raw();
            let (q_row, counts_row) = (q.into_iter().next().unwrap(), counts.into_iter().next().unwrap());
            tables
                .get_mut(&op)
                .expect("slice operators match scenario operators")
                .set_row(slice.state_index, q_row, counts_row)?;
        }
        if let Some(records) = slice.episode_log {
            episode_log = Some((slice.state_index, records));
        }
    }

    Ok(TrainingResult {
        mechanism: config.mechanism,
        states: states.clone(),
        action_spaces,
        tables,
        episode_log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::Segment;
    use crate::scenarios::ProductionUnit;

    fn monopoly_scenario() -> Scenario {
        Scenario::new(
            "monopoly",
            vec![ProductionUnit {
                unit_id: "M-GAS".into(),
                operator_id: "M".into(),
                technology: "GAS".into(),
                segment: Segment::Nnmcs,
                capacity_mw: 100.0,
                marginal_cost_eur_mwh: 10.0,
            }],
        )
        .unwrap()
    }

    #[test]
    fn monopolist_learns_the_top_markup_under_pay_as_bid() {
        // With no competitor and demand below capacity, pay-as-bid profit is
        // proportional to the markup, so the greedy action must be the top
        // of the grid and each cell's value the exact expected profit.
        let scenario = monopoly_scenario();
        let mut config = TrainingConfig::new(Mechanism::PayAsBid, 99);
        config.episodes = 400;
        let slice = train_state(&scenario, &config, 0, 50.0, false).unwrap();
        let table = &slice.per_operator["M"];
        assert_eq!(table.best_action(0).unwrap(), 3);
        let q = table.q_row(0).unwrap();
        let expect = [0.0, 250.0, 500.0, 1000.0]; // 10 * m * 50 MWh
        for (cell, want) in q.iter().zip(expect) {
            let visited = table.counts_row(0).unwrap();
            assert!(visited.iter().all(|&c| c > 0), "all actions explored");
            assert!((cell - want).abs() < 1e-9, "q {cell} vs {want}");
        }
    }

    #[test]
    fn same_seed_reproduces_training_exactly() {
        let scenario = monopoly_scenario();
        let mut config = TrainingConfig::new(Mechanism::PayAsClear, 1234);
        config.episodes = 120;
        let a = train_state(&scenario, &config, 3, 60.0, true).unwrap();
        let b = train_state(&scenario, &config, 3, 60.0, true).unwrap();
        assert_eq!(a.per_operator, b.per_operator);
        assert_eq!(a.episode_log, b.episode_log);
    }

    #[test]
    fn state_seeds_separate_levels_and_mechanisms() {
        let mut seen = std::collections::BTreeSet::new();
        for mechanism in Mechanism::ALL {
            for idx in 0..50 {
                assert!(seen.insert(derive_state_seed(42, idx, mechanism)));
            }
        }
        // And the master seed matters.
        assert_ne!(
            derive_state_seed(1, 0, Mechanism::PayAsBid),
            derive_state_seed(2, 0, Mechanism::PayAsBid)
        );
    }

    #[test]
    fn parallel_and_single_threaded_training_agree() {
        let scenario = monopoly_scenario();
        let mut config = TrainingConfig::new(Mechanism::SegmentedPayAsClear, 7);
        config.episodes = 60;
        let states = StateSpace::new(scenario.total_capacity_mw(), 5).unwrap();

        let parallel = train_all_states(&scenario, &config, &states, Some(2)).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| train_all_states(&scenario, &config, &states, Some(2)).unwrap());
        assert_eq!(parallel, single);
        assert_eq!(parallel.episode_log.as_ref().unwrap().0, 2);
        assert_eq!(
            parallel.episode_log.unwrap().1.len(),
            config.episodes as usize
        );
    }

    #[test]
    fn assembled_tables_match_per_state_runs() {
        let scenario = monopoly_scenario();
        let mut config = TrainingConfig::new(Mechanism::PayAsBid, 5);
        config.episodes = 40;
        let states = StateSpace::new(scenario.total_capacity_mw(), 3).unwrap();
        let all = train_all_states(&scenario, &config, &states, None).unwrap();
        for (idx, &demand) in states.levels().iter().enumerate() {
            let slice = train_state(&scenario, &config, idx, demand, false).unwrap();
            let expected = &slice.per_operator["M"];
            assert_eq!(
                all.tables["M"].q_row(idx).unwrap(),
                expected.q_row(0).unwrap()
            );
            assert_eq!(
                all.tables["M"].counts_row(idx).unwrap(),
                expected.counts_row(0).unwrap()
            );
        }
    }
}
