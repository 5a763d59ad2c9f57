//! Action-value table, action selection, and greedy policy extraction.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ActionSpace, StateSpace};
use crate::error::{Error, Result};
use crate::market::Mechanism;

/// Tabular action values with per-cell visit counts.
///
/// Updates average rewards exactly: the visit count is bumped *first* and the
/// learning rate is its reciprocal, so after `n` updates the cell holds the
/// arithmetic mean of the `n` rewards seen. Unvisited cells stay at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    n_actions: usize,
    q: Vec<Vec<f64>>,
    counts: Vec<Vec<u64>>,
}

impl QTable {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_actions,
            q: vec![vec![0.0; n_actions]; n_states],
            counts: vec![vec![0; n_actions]; n_states],
        }
    }

    pub fn n_states(&self) -> usize {
        self.q.len()
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn q_row(&self, state: usize) -> Result<&[f64]> {
        self.q
            .get(state)
            .map(Vec::as_slice)
            .ok_or(Error::IndexOutOfBounds {
                what: "state",
                index: state,
                size: self.q.len(),
            })
    }

    pub fn counts_row(&self, state: usize) -> Result<&[u64]> {
        self.counts
            .get(state)
            .map(Vec::as_slice)
            .ok_or(Error::IndexOutOfBounds {
                what: "state",
                index: state,
                size: self.counts.len(),
            })
    }

    /// Incorporates one observed reward.
    pub fn update(&mut self, state: usize, action: usize, reward: f64) -> Result<()> {
        if state >= self.q.len() {
            return Err(Error::IndexOutOfBounds {
                what: "state",
                index: state,
                size: self.q.len(),
            });
        }
        if action >= self.n_actions {
            return Err(Error::IndexOutOfBounds {
                what: "action",
                index: action,
                size: self.n_actions,
            });
        }
        if !reward.is_finite() {
            return Err(Error::NonFiniteReward {
                state,
                action,
                reward,
            });
        }
        let count = &mut self.counts[state][action];
        *count += 1;
        let alpha = 1.0 / *count as f64;
        let cell = &mut self.q[state][action];
        *cell += alpha * (reward - *cell);
        Ok(())
    }

    /// Greedy action for a state; ties resolve to the lowest action index.
    pub fn best_action(&self, state: usize) -> Result<usize> {
        let row = self.q_row(state)?;
        if row.is_empty() {
            return Err(Error::EmptyInput {
                what: "action row".into(),
            });
        }
        let mut best = 0;
        for (i, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = i;
            }
        }
        Ok(best)
    }

    /// Installs a whole state row at once (used when assembling a table from
    /// independently trained per-state slices).
    pub(crate) fn set_row(&mut self, state: usize, q: Vec<f64>, counts: Vec<u64>) -> Result<()> {
        if state >= self.q.len() {
            return Err(Error::IndexOutOfBounds {
                what: "state",
                index: state,
                size: self.q.len(),
            });
        }
        if q.len() != self.n_actions || counts.len() != self.n_actions {
            return Err(Error::IndexOutOfBounds {
                what: "action",
                index: q.len().max(counts.len()),
                size: self.n_actions,
            });
        }
        self.q[state] = q;
        self.counts[state] = counts;
        Ok(())
    }

    pub(crate) fn into_raw(self) -> (Vec<Vec<f64>>, Vec<Vec<u64>>) {
        (self.q, self.counts)
    }

    pub(crate) fn from_raw(q: Vec<Vec<f64>>, counts: Vec<Vec<u64>>) -> Result<Self> {
        let n_actions = q.first().map(Vec::len).unwrap_or(0);
        if n_actions == 0
            || q.len() != counts.len()
            || q.iter().any(|r| r.len() != n_actions)
            || counts.iter().any(|r| r.len() != n_actions)
        {
            return Err(Error::InvalidData {
                what: "action-value table".into(),
                detail: "ragged or empty q/counts matrices".into(),
            });
        }
        Ok(Self { n_actions, q, counts })
    }
}

/// ε-greedy selection: with probability `epsilon` a uniformly random action,
/// otherwise the greedy one. Draws exactly one random number for the
/// explore/exploit decision and one more only when exploring, so callers can
/// reason about RNG stream consumption.
pub fn select_action(
    table: &QTable,
    state: usize,
    epsilon: f64,
    rng: &mut impl Rng,
) -> Result<usize> {
    if !(0.0..=1.0).contains(&epsilon) || !epsilon.is_finite() {
        return Err(Error::InvalidData {
            what: "epsilon".into(),
            detail: format!("{epsilon} must be in [0, 1]"),
        });
    }
    table.q_row(state)?; // bounds check before drawing
    if rng.random::<f64>() < epsilon {
        Ok(rng.random_range(0..table.n_actions()))
    } else {
        table.best_action(state)
    }
}

/// A frozen greedy policy for one operator under one mechanism:
/// per demand level, the chosen markup combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub mechanism: Mechanism,
    pub operator_id: String,
    /// Demand levels (MW), ascending; one policy entry each.
    pub states: Vec<f64>,
    pub technologies: Vec<String>,
    pub markup_grid: Vec<f64>,
    /// Chosen action index per state.
    pub actions: Vec<usize>,
    /// True where the greedy action was never actually visited during
    /// training (its value is the untouched initialisation, not evidence).
    pub cold: Vec<bool>,
}

impl Policy {
    pub fn action_space(&self) -> Result<ActionSpace> {
        ActionSpace::new(self.technologies.clone(), self.markup_grid.clone())
    }

    /// Markups (one per technology) chosen at a state index.
    pub fn markups_at(&self, state: usize) -> Result<Vec<f64>> {
        let action = *self.actions.get(state).ok_or(Error::IndexOutOfBounds {
            what: "state",
            index: state,
            size: self.actions.len(),
        })?;
        self.action_space()?.markups(action)
    }

    fn state_space(&self) -> Result<StateSpace> {
        StateSpace::from_levels(self.states.clone())
    }
}

/// Greedy policy per state, with cold-state flags.
pub fn extract_policy(
    table: &QTable,
    states: &StateSpace,
    actions: &ActionSpace,
    mechanism: Mechanism,
    operator_id: &str,
) -> Result<Policy> {
    if table.n_states() != states.len() {
        return Err(Error::PolicyMismatch {
            detail: format!(
                "table has {} states, state space has {}",
                table.n_states(),
                states.len()
            ),
        });
    }
    if table.n_actions() != actions.len() {
        return Err(Error::PolicyMismatch {
            detail: format!(
                "table has {} actions, action space has {}",
                table.n_actions(),
                actions.len()
            ),
        });
    }
    let mut chosen = Vec::with_capacity(states.len());
    let mut cold = Vec::with_capacity(states.len());
    for s in 0..states.len() {
        let a = table.best_action(s)?;
        chosen.push(a);
        cold.push(table.counts_row(s)?[a] == 0);
    }
    Ok(Policy {
        mechanism,
        operator_id: operator_id.to_string(),
        states: states.levels().to_vec(),
        technologies: actions.technologies().to_vec(),
        markup_grid: actions.markup_grid().to_vec(),
        actions: chosen,
        cold,
    })
}

/// Applies a policy to an arbitrary demand: the markups of the nearest
/// trained demand level (ties toward the lower level). Returns the state
/// index used and the markups per technology.
pub fn nearest_state_policy(policy: &Policy, demand_mw: f64) -> Result<(usize, Vec<f64>)> {
    let states = policy.state_space()?;
    let idx = states.nearest_index(demand_mw);
    Ok((idx, policy.markups_at(idx)?))
}

/// Policies for a whole experiment, keyed by mechanism and operator.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PolicySet {
    policies: BTreeMap<Mechanism, BTreeMap<String, Policy>>,
}

impl PolicySet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a policy; a second policy for the same mechanism/operator pair is
    /// almost certainly a mixed-up input directory, so it is rejected.
    pub fn insert(&mut self, policy: Policy) -> Result<()> {
        let per_mech = self.policies.entry(policy.mechanism).or_default();
        if per_mech.contains_key(&policy.operator_id) {
            return Err(Error::PolicyMismatch {
                detail: format!(
                    "duplicate policy for {} / {}",
                    policy.mechanism, policy.operator_id
                ),
            });
        }
        per_mech.insert(policy.operator_id.clone(), policy);
        Ok(())
    }

    pub fn get(&self, mechanism: Mechanism, operator_id: &str) -> Option<&Policy> {
        self.policies.get(&mechanism)?.get(operator_id)
    }

    pub fn mechanisms(&self) -> impl Iterator<Item = Mechanism> + '_ {
        self.policies.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Policy> {
        self.policies.values().flat_map(|m| m.values())
    }

    pub fn is_empty(&self) -> bool {
        self.policies.is_empty()
    }

    /// Checks that every listed operator has a policy for `mechanism`.
    pub fn require_operators(&self, mechanism: Mechanism, operators: &[String]) -> Result<()> {
        for op in operators {
            if self.get(mechanism, op).is_none() {
                return Err(Error::PolicyMismatch {
                    detail: format!("no policy for operator `{op}` under {mechanism}"),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn q_cells_hold_exact_running_means() {
        let mut table = QTable::new(1, 2);
        for (reward, expected_mean) in [(3.0, 3.0), (1.0, 2.0), (2.0, 2.0)] {
            table.update(0, 1, reward).unwrap();
            assert_eq!(table.q_row(0).unwrap()[1], expected_mean);
        }
        assert_eq!(table.counts_row(0).unwrap(), &[0, 3]);
        assert_eq!(table.q_row(0).unwrap()[0], 0.0);
    }

    #[test]
    fn non_finite_rewards_are_refused() {
        let mut table = QTable::new(1, 1);
        assert!(table.update(0, 0, f64::NAN).is_err());
        assert!(table.update(0, 0, f64::INFINITY).is_err());
        assert!(table.update(0, 1, 1.0).is_err());
        assert!(table.update(1, 0, 1.0).is_err());
    }

    #[test]
    fn greedy_ties_pick_the_lowest_action() {
        let mut table = QTable::new(1, 4);
        table.update(0, 2, 5.0).unwrap();
        table.update(0, 3, 5.0).unwrap();
        assert_eq!(table.best_action(0).unwrap(), 2);
        // All zero: lowest index wins.
        let fresh = QTable::new(1, 4);
        assert_eq!(fresh.best_action(0).unwrap(), 0);
    }

    #[test]
    fn zero_epsilon_is_pure_greedy_one_is_pure_random() {
        let mut table = QTable::new(1, 8);
        table.update(0, 5, 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            assert_eq!(select_action(&table, 0, 0.0, &mut rng).unwrap(), 5);
        }
        let mut seen = [false; 8];
        for _ in 0..500 {
            seen[select_action(&table, 0, 1.0, &mut rng).unwrap()] = true;
        }
        assert!(seen.iter().all(|&s| s), "exploration missed an action");
        assert!(select_action(&table, 0, 1.5, &mut rng).is_err());
    }

    #[test]
    fn policy_extraction_flags_unvisited_greedy_actions() {
        let states = StateSpace::from_levels(vec![100.0, 200.0]).unwrap();
        let actions = ActionSpace::new(vec!["T".into()], vec![0.0, 0.1]).unwrap();
        let mut table = QTable::new(2, 2);
        table.update(0, 1, 4.0).unwrap();
        // State 1 never visited: greedy action 0 is cold.
        let policy =
            extract_policy(&table, &states, &actions, Mechanism::PayAsBid, "op").unwrap();
        assert_eq!(policy.actions, vec![1, 0]);
        assert_eq!(policy.cold, vec![false, true]);

        let (idx, markups) = nearest_state_policy(&policy, 140.0).unwrap();
        assert_eq!(idx, 0);
        assert_eq!(markups, vec![0.1]);
    }

    #[test]
    fn policy_set_rejects_duplicates_and_reports_gaps() {
        let policy = Policy {
            mechanism: Mechanism::PayAsClear,
            operator_id: "OpA".into(),
            states: vec![1.0, 2.0],
            technologies: vec!["T".into()],
            markup_grid: vec![0.0],
            actions: vec![0, 0],
            cold: vec![false, false],
        };
        let mut set = PolicySet::new();
        set.insert(policy.clone()).unwrap();
        assert!(set.insert(policy).is_err());
        assert!(set
            .require_operators(Mechanism::PayAsClear, &["OpA".into()])
            .is_ok());
        assert!(set
            .require_operators(Mechanism::PayAsClear, &["OpA".into(), "OpB".into()])
            .is_err());
        assert!(set
            .require_operators(Mechanism::PayAsBid, &["OpA".into()])
            .is_err());
    }
}
