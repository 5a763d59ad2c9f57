//! On-disk formats for trained tables and policies.
//!
//! Action-value tables go to JSON, one file per operator and mechanism:
//!
//! ```json
//! {
//!   "mechanism": "spac",
//!   "operator_id": "OpA",
//!   "technologies": ["PV", "WIND"],
//!   "markup_grid": [0.0, 0.05, 0.10, 0.20],
//!   "states": [500.0, 511.1],
//!   "actions": [[0.0, 0.0], [0.0, 0.05]],
//!   "q": [[...], [...]],
//!   "counts": [[...], [...]]
//! }
//! ```
//!
//! `actions[i]` spells out the markup combination of action index `i` (one
//! value per technology), `q[s][a]` and `counts[s][a]` are indexed by state
//! and action. Policies additionally go to a flat CSV
//! (`state_mw,operator_id,technology,markup_pct`) for spreadsheet work, with
//! markups as percentages.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::qtable::{Policy, QTable};
use super::training::{EpisodeRecord, TrainingResult};
use super::{ActionSpace, StateSpace};
use crate::error::{Error, Result};
use crate::market::Mechanism;

/// Serialized form of one operator's trained table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTableFile {
    pub mechanism: Mechanism,
    pub operator_id: String,
    pub technologies: Vec<String>,
    pub markup_grid: Vec<f64>,
    pub states: Vec<f64>,
    pub actions: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub counts: Vec<Vec<u64>>,
}

impl QTableFile {
    /// Snapshot of one operator's table from a training result.
    pub fn from_training(result: &TrainingResult, operator_id: &str) -> Result<Self> {
        let table = result
            .tables
            .get(operator_id)
            .ok_or_else(|| Error::PolicyMismatch {
                detail: format!("no trained table for operator `{operator_id}`"),
            })?;
        let space = &result.action_spaces[operator_id];
        let actions = (0..space.len())
            .map(|a| space.markups(a))
            .collect::<Result<Vec<_>>>()?;
        let (q, counts) = table.clone().into_raw();
        Ok(Self {
            mechanism: result.mechanism,
            operator_id: operator_id.to_string(),
            technologies: space.technologies().to_vec(),
            markup_grid: space.markup_grid().to_vec(),
            states: result.states.levels().to_vec(),
            actions,
            q,
            counts,
        })
    }

    /// Rebuilds the in-memory pieces, validating shape consistency.
    pub fn into_parts(self) -> Result<(QTable, StateSpace, ActionSpace)> {
        let states = StateSpace::from_levels(self.states)?;
        let space = ActionSpace::new(self.technologies, self.markup_grid)?;
        let table = QTable::from_raw(self.q, self.counts)?;
        if table.n_states() != states.len() || table.n_actions() != space.len() {
            return Err(Error::PolicyMismatch {
                detail: format!(
                    "table is {}x{} but file declares {} states and {} actions",
                    table.n_states(),
                    table.n_actions(),
                    states.len(),
                    space.len()
                ),
            });
        }
        Ok((table, states, space))
    }
}

pub fn write_qtable_json(path: impl AsRef<Path>, file: &QTableFile) -> Result<()> {
    let json = serde_json::to_string_pretty(file)?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn read_qtable_json(path: impl AsRef<Path>) -> Result<QTableFile> {
    let raw = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&raw)?)
}

pub fn write_policy_json(path: impl AsRef<Path>, policy: &Policy) -> Result<()> {
    let json = serde_json::to_string_pretty(policy)?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn read_policy_json(path: impl AsRef<Path>) -> Result<Policy> {
    let raw = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&raw)?)
}

/// Flat policy export: one row per (state, technology), markups in percent.
pub fn write_policy_csv<'a>(
    path: impl AsRef<Path>,
    policies: impl IntoIterator<Item = &'a Policy>,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    writer.write_record(["state_mw", "operator_id", "technology", "markup_pct"])?;
    for policy in policies {
        for (state_idx, &state_mw) in policy.states.iter().enumerate() {
            let markups = policy.markups_at(state_idx)?;
            for (tech, markup) in policy.technologies.iter().zip(markups) {
                writer.write_record([
                    format!("{state_mw}"),
                    policy.operator_id.clone(),
                    tech.clone(),
                    format!("{}", markup * 100.0),
                ])?;
            }
        }
    }
    writer.flush()?;
    Ok(())
}

/// Convergence log: one row per operator per episode.
pub fn write_episode_log_csv(path: impl AsRef<Path>, records: &[EpisodeRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    writer.write_record([
        "episode",
        "epsilon",
        "operator_id",
        "action",
        "reward",
        "pun",
        "total_cost",
    ])?;
    for record in records {
        for (op, &action) in &record.actions {
            writer.write_record([
                record.episode.to_string(),
                record.epsilon.to_string(),
                op.clone(),
                action.to_string(),
                record.rewards.get(op).copied().unwrap_or(0.0).to_string(),
                record.pun.to_string(),
                record.total_cost.to_string(),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}
