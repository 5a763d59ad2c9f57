//! Strategic bidding agents.
//!
//! Each operator learns a *markup policy*: for every demand level (the
//! learner's state) it picks one markup per technology it owns, offers every
//! unit at `marginal cost * (1 + markup)`, and receives its cleared profit as
//! the reward. Episodes are one-shot — the next demand level does not depend
//! on the action — so the learner is a stateless bandit per demand level
//! (classic tabular Q-learning with a discount of zero), trained by
//! ε-greedy exploration with an exponentially decaying ε.
//!
//! All learners for one demand level are trained *jointly*: every episode,
//! each operator picks an action against its own table and the market clears
//! once with everyone's offers combined. Learning is therefore a best
//! response to co-evolving opponents, not to a fixed environment.

mod io;
mod qtable;
mod training;

pub use io::{
    read_policy_json, read_qtable_json, write_episode_log_csv, write_policy_csv,
    write_policy_json, write_qtable_json, QTableFile,
};
pub use qtable::{extract_policy, nearest_state_policy, select_action, Policy, PolicySet, QTable};
pub use training::{
    derive_state_seed, train_all_states, train_state, EpisodeRecord, StateTrainingSlice,
    TrainingResult,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::Mechanism;

/// States span this fraction of total capacity...
pub const DEMAND_LO_FRAC: f64 = 0.25;
/// ...up to this fraction.
pub const DEMAND_HI_FRAC: f64 = 0.80;
/// Default number of demand levels an agent distinguishes.
pub const DEFAULT_STATES: usize = 100;
/// Default number of training episodes per demand level.
pub const DEFAULT_EPISODES: u32 = 2000;
/// Default exploration bounds.
pub const DEFAULT_EPS_MAX: f64 = 1.0;
pub const DEFAULT_EPS_MIN: f64 = 0.05;

/// Markups an operator may choose from, as fractions of marginal cost.
///
/// Uniform-price settlement punishes overpricing quickly (you drop out of
/// merit order while the price stays put), so its grid is fine-grained;
/// pay-as-bid rewards aggressive pricing, so its grid reaches much higher.
pub fn default_markup_grid(mechanism: Mechanism) -> Vec<f64> {
    match mechanism {
        Mechanism::PayAsBid => vec![0.0, 0.50, 1.00, 2.00],
        Mechanism::PayAsClear | Mechanism::SegmentedPayAsClear => vec![0.0, 0.05, 0.10, 0.20],
    }
}

/// The discrete action set of one operator: every combination of one markup
/// per owned technology.
///
/// Actions are indexed lexicographically with the *first* technology as the
/// most significant digit: with grid `[0, 0.05]` and technologies
/// `[PV, GAS]`, action 0 is `(0, 0)`, action 1 is `(0, 0.05)`, action 2 is
/// `(0.05, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpace {
    technologies: Vec<String>,
    markup_grid: Vec<f64>,
}

impl ActionSpace {
    pub fn new(technologies: Vec<String>, markup_grid: Vec<f64>) -> Result<Self> {
        if technologies.is_empty() {
            return Err(Error::EmptyInput {
                what: "technology list".into(),
            });
        }
        if markup_grid.is_empty() {
            return Err(Error::EmptyInput {
                what: "markup grid".into(),
            });
        }
        for &m in &markup_grid {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::InvalidData {
                    what: "markup grid".into(),
                    detail: format!("markup {m} must be finite and >= 0"),
                });
            }
        }
        let space = Self {
            technologies,
            markup_grid,
        };
        // Reject combinatorial explosions up front rather than overflowing.
        space.checked_len()?;
        Ok(space)
    }

    /// Grid defaulted from the mechanism.
    pub fn for_mechanism(mechanism: Mechanism, technologies: Vec<String>) -> Result<Self> {
        Self::new(technologies, default_markup_grid(mechanism))
    }

    pub fn technologies(&self) -> &[String] {
        &self.technologies
    }

    pub fn markup_grid(&self) -> &[f64] {
        &self.markup_grid
    }

    fn checked_len(&self) -> Result<usize> {
        self.markup_grid
            .len()
            .checked_pow(self.technologies.len() as u32)
            .filter(|&n| n <= 1 << 24)
            .ok_or_else(|| Error::InvalidData {
                what: "action space".into(),
                detail: format!(
                    "{} markups ^ {} technologies does not fit in a table",
                    self.markup_grid.len(),
                    self.technologies.len()
                ),
            })
    }

    /// Number of joint markup combinations.
    pub fn len(&self) -> usize {
        // Validated at construction; cannot fail here.
        self.markup_grid.len().pow(self.technologies.len() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Decodes an action index into one markup per technology, in
    /// `technologies()` order.
    pub fn markups(&self, action: usize) -> Result<Vec<f64>> {
        if action >= self.len() {
            return Err(Error::IndexOutOfBounds {
                what: "action",
                index: action,
                size: self.len(),
            });
        }
        let base = self.markup_grid.len();
        let n = self.technologies.len();
        let mut digits = vec![0.0; n];
        let mut rest = action;
        for slot in digits.iter_mut().rev() {
            *slot = self.markup_grid[rest % base];
            rest /= base;
        }
        Ok(digits)
    }

    /// Markup this action assigns to one technology.
    pub fn markup_for(&self, action: usize, technology: &str) -> Result<f64> {
        let pos = self
            .technologies
            .iter()
            .position(|t| t == technology)
            .ok_or_else(|| Error::InvalidData {
                what: "technology".into(),
                detail: format!("`{technology}` not in action space"),
            })?;
        Ok(self.markups(action)?[pos])
    }

    /// Inverse of [`markups`](Self::markups); `None` when some markup is not
    /// on the grid.
    pub fn index_of(&self, markups: &[f64]) -> Option<usize> {
        if markups.len() != self.technologies.len() {
            return None;
        }
        let base = self.markup_grid.len();
        let mut index = 0usize;
        for &m in markups {
            let digit = self
                .markup_grid
                .iter()
                .position(|&g| (g - m).abs() <= 1e-12)?;
            index = index * base + digit;
        }
        Some(index)
    }
}

/// The demand levels a learner distinguishes: equidistant points covering
/// 25%–80% of the fleet's total capacity, endpoints included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    levels: Vec<f64>,
}

impl StateSpace {
    pub fn new(total_capacity_mw: f64, n_states: usize) -> Result<Self> {
        if !total_capacity_mw.is_finite() || total_capacity_mw <= 0.0 {
            return Err(Error::InvalidData {
                what: "total capacity".into(),
                detail: format!("{total_capacity_mw} must be finite and > 0"),
            });
        }
        if n_states < 2 {
            return Err(Error::InvalidData {
                what: "state count".into(),
                detail: format!("{n_states} must be >= 2"),
            });
        }
        let lo = DEMAND_LO_FRAC * total_capacity_mw;
        let hi = DEMAND_HI_FRAC * total_capacity_mw;
        let step = (hi - lo) / (n_states - 1) as f64;
        let mut levels: Vec<f64> = (0..n_states).map(|i| lo + step * i as f64).collect();
        // Make the endpoints exact regardless of accumulation error.
        levels[0] = lo;
        levels[n_states - 1] = hi;
        Ok(Self { levels })
    }

    /// Rebuilds a state space from explicit levels (e.g. read back from a
    /// table file). Levels must be finite and strictly increasing.
    pub fn from_levels(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::EmptyInput {
                what: "state levels".into(),
            });
        }
        for pair in levels.windows(2) {
            if !(pair[0].is_finite() && pair[1].is_finite()) || pair[0] >= pair[1] {
                return Err(Error::InvalidData {
                    what: "state levels".into(),
                    detail: "levels must be finite and strictly increasing".into(),
                });
            }
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Index of the level closest to `demand_mw`; equidistant demands resolve
    /// to the lower level. Demands outside the covered band clamp to the
    /// nearest end.
    pub fn nearest_index(&self, demand_mw: f64) -> usize {
        let right = self.levels.partition_point(|&l| l < demand_mw);
        if right == 0 {
            return 0;
        }
        if right == self.levels.len() {
            return self.levels.len() - 1;
        }
        let left = right - 1;
        if (self.levels[right] - demand_mw) < (demand_mw - self.levels[left]) {
            right
        } else {
            left
        }
    }
}

/// Exponentially decaying exploration rate.
///
/// `ε(t) = ε_max · e^(−λt)` with λ chosen so that `ε(total) = ε_min`:
/// `λ = −ln(ε_min / ε_max) / total`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    eps_max: f64,
    eps_min: f64,
    total_episodes: u32,
    lambda: f64,
}

impl EpsilonSchedule {
    pub fn new(eps_max: f64, eps_min: f64, total_episodes: u32) -> Result<Self> {
        let ok = eps_min.is_finite()
            && eps_max.is_finite()
            && eps_min > 0.0
            && eps_min <= eps_max
            && eps_max <= 1.0;
        if !ok {
            return Err(Error::InvalidData {
                what: "epsilon bounds".into(),
                detail: format!("need 0 < eps_min <= eps_max <= 1, got {eps_min}, {eps_max}"),
            });
        }
        if total_episodes == 0 {
            return Err(Error::InvalidData {
                what: "episode count".into(),
                detail: "must be >= 1".into(),
            });
        }
        let lambda = -(eps_min / eps_max).ln() / total_episodes as f64;
        Ok(Self {
            eps_max,
            eps_min,
            total_episodes,
            lambda,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn total_episodes(&self) -> u32 {
        self.total_episodes
    }

    /// ε at an episode in `0..=total_episodes`.
    pub fn value_at(&self, episode: u32) -> Result<f64> {
        if episode > self.total_episodes {
            return Err(Error::EpisodeOutOfRange {
                episode,
                total: self.total_episodes,
            });
        }
        // The endpoints are ε_max and ε_min by definition; returning them
        // directly keeps them exact instead of within an exp/ln round-trip.
        if episode == 0 {
            return Ok(self.eps_max);
        }
        if episode == self.total_episodes {
            return Ok(self.eps_min);
        }
        Ok(self.eps_max * (-self.lambda * episode as f64).exp())
    }
}

/// Everything that parameterises one training run (shared by all demand
/// levels).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub mechanism: Mechanism,
    /// Episodes per demand level.
    pub episodes: u32,
    pub eps_max: f64,
    pub eps_min: f64,
    /// Master seed; per-level seeds are derived from it, the level index and
    /// the mechanism, so runs are reproducible regardless of thread count.
    pub master_seed: u64,
    /// `None` uses [`default_markup_grid`] for the mechanism.
    pub markup_grid: Option<Vec<f64>>,
}

impl TrainingConfig {
    pub fn new(mechanism: Mechanism, master_seed: u64) -> Self {
        Self {
            mechanism,
            episodes: DEFAULT_EPISODES,
            eps_max: DEFAULT_EPS_MAX,
            eps_min: DEFAULT_EPS_MIN,
            master_seed,
            markup_grid: None,
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        self.markup_grid
            .clone()
            .unwrap_or_else(|| default_markup_grid(self.mechanism))
    }

    pub fn schedule(&self) -> Result<EpsilonSchedule> {
        EpsilonSchedule::new(self.eps_max, self.eps_min, self.episodes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_indexing_is_lexicographic_first_tech_most_significant() {
        let space = ActionSpace::new(
            vec!["PV".into(), "GAS".into()],
            vec![0.0, 0.05, 0.10, 0.20],
        )
        .unwrap();
        assert_eq!(space.len(), 16);
        assert_eq!(space.markups(0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(space.markups(1).unwrap(), vec![0.0, 0.05]);
        assert_eq!(space.markups(4).unwrap(), vec![0.05, 0.0]);
        assert_eq!(space.markups(15).unwrap(), vec![0.20, 0.20]);
        assert_eq!(space.index_of(&[0.05, 0.0]), Some(4));
        assert_eq!(space.index_of(&[0.20, 0.20]), Some(15));
        assert_eq!(space.markup_for(6, "GAS").unwrap(), 0.10);
        assert_eq!(space.markup_for(6, "PV").unwrap(), 0.05);
    }

    #[test]
    fn five_technologies_four_markups_give_1024_actions() {
        let techs: Vec<String> = ["PV", "WIND", "HYDRO", "GAS", "COAL"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let space = ActionSpace::for_mechanism(Mechanism::PayAsClear, techs).unwrap();
        assert_eq!(space.len(), 1024);
    }

    #[test]
    fn state_space_covers_quarter_to_eighty_percent() {
        let states = StateSpace::new(2000.0, 100).unwrap();
        assert_eq!(states.len(), 100);
        assert_eq!(states.levels()[0], 500.0);
        assert_eq!(states.levels()[99], 1600.0);
        let step = states.levels()[1] - states.levels()[0];
        assert!((step - 1100.0 / 99.0).abs() < 1e-9);
    }

    #[test]
    fn nearest_state_resolves_ties_downward() {
        let states = StateSpace::from_levels(vec![100.0, 200.0, 300.0]).unwrap();
        assert_eq!(states.nearest_index(149.0), 0);
        assert_eq!(states.nearest_index(150.0), 0); // exact midpoint -> lower
        assert_eq!(states.nearest_index(151.0), 1);
        assert_eq!(states.nearest_index(0.0), 0);
        assert_eq!(states.nearest_index(1e9), 2);
        assert_eq!(states.nearest_index(200.0), 1);
    }

    #[test]
    fn epsilon_decays_from_max_to_min() {
        let sched = EpsilonSchedule::new(1.0, 0.05, 2000).unwrap();
        assert_eq!(sched.value_at(0).unwrap(), 1.0);
        let end = sched.value_at(2000).unwrap();
        assert!((end - 0.05).abs() < 1e-12, "eps(T) = {end}");
        // Halfway the decay has covered half the log-range.
        let mid = sched.value_at(1000).unwrap();
        assert!((mid - 0.05f64.sqrt()).abs() < 1e-12, "eps(T/2) = {mid}");
        assert!(sched.value_at(2001).is_err());
    }

    #[test]
    fn epsilon_bounds_are_validated() {
        assert!(EpsilonSchedule::new(1.0, 0.0, 100).is_err());
        assert!(EpsilonSchedule::new(0.5, 0.6, 100).is_err());
        assert!(EpsilonSchedule::new(1.2, 0.05, 100).is_err());
        assert!(EpsilonSchedule::new(1.0, 0.05, 0).is_err());
    }

    #[test]
    fn oversized_action_spaces_are_rejected() {
        let techs: Vec<String> = (0..40).map(|i| format!("T{i}")).collect();
        assert!(ActionSpace::new(techs, vec![0.0, 0.1, 0.2, 0.3]).is_err());
    }
}
