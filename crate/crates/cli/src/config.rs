//! Experiment configuration: one TOML file, overridden by command-line
//! flags (flags always win). Every field is optional in the file; each
//! command validates that the pieces it needs are present after the merge
//! and reports the offending field path when they are not.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use spaclab_core::Mechanism;

/// A configuration or usage problem: the field path and what is wrong.
/// Mapped to exit code 2.
#[derive(Debug, Clone)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(field: &str, message: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(ConfigError {
        field: field.to_string(),
        message: message.into(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSource,
    /// Settlement rules to run, as tags: `pab`, `pac`, `spac`.
    /// Absent means all three.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mechanisms: Option<Vec<String>>,
    /// `marginal` (default), `policy` (read policy files), or `train`
    /// (learn policies in-memory before simulating).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    /// Directory holding `policy_<mechanism>_<operator>.json` files;
    /// required when `strategy = "policy"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policies: Option<PathBuf>,
    pub training: TrainingSection,
    pub demand: DemandSource,
    pub clustering: ClusteringSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Cap on worker threads; absent means all cores.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

/// Where the production fleet comes from. The three sources are mutually
/// exclusive; naming none of them selects the built-in `pniec2030` fleet.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSource {
    /// Name of a built-in fleet. Only `pniec2030` exists.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    /// Path to a scenario JSON file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Path to an offer-history CSV; the fleet is clustered from it using
    /// the `[clustering]` section.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offers_csv: Option<PathBuf>,
}

impl ScenarioSource {
    fn count(&self) -> usize {
        [
            self.builtin.is_some(),
            self.path.is_some(),
            self.offers_csv.is_some(),
        ]
        .iter()
        .filter(|&&set| set)
        .count()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    /// Episodes per demand level.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub episodes: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_min: Option<f64>,
    /// Number of demand levels in the state grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states: Option<usize>,
    /// Master seed. Required whenever training runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Markup grid per mechanism tag; absent mechanisms use their default.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub markup_grids: BTreeMap<String, Vec<f64>>,
    /// State index whose episodes go to the convergence log
    /// (default: the middle of the grid).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_state: Option<usize>,
}

/// What demand to clear. `value` serves `clear`; `curve` and `synthetic`
/// serve `simulate`. At most one may be set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemandSource {
    /// Single demand in MWh.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// Load-curve CSV (`timestamp_iso8601,demand_mw`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticCurveSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticCurveSection {
    /// `day` (needs `date`) or `year` (needs `year`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<String>,
    /// Calendar date, `YYYY-MM-DD`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub date: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_mw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_mw: Option<f64>,
    /// Seed of the curve noise. Required for synthetic generation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Optional affine rescale of the finished curve; both or neither.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale_max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_min: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    /// Units below this offer-count percentile are dropped (0..1).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub activity_percentile: Option<f64>,
    /// Seed of the k-means initialisation. Required for clustering.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Marginal-cost threshold separating the two market segments.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segment_threshold_eur_mwh: Option<f64>,
    /// Name given to the derived scenario.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario_name: Option<String>,
}

/// Reads and parses a TOML config file. Parse problems (including unknown
/// fields) are config errors.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        config_error("config", format!("cannot read {}: {e}", path.display()))
    })?;
    toml::from_str(&text)
        .map_err(|e| config_error("config", format!("{}: {e}", path.display())))
}

impl ExperimentConfig {
    /// Structural checks shared by every command: the mutual exclusivities.
    pub fn validate(&self) -> Result<()> {
        if self.scenario.count() > 1 {
            return Err(config_error(
                "scenario",
                "builtin, path, and offers_csv are mutually exclusive — set one",
            ));
        }
        let demand_sources = [
            self.demand.value.is_some(),
            self.demand.curve.is_some(),
            self.demand.synthetic.is_some(),
        ]
        .iter()
        .filter(|&&set| set)
        .count();
        if demand_sources > 1 {
            return Err(config_error(
                "demand",
                "value, curve, and synthetic are mutually exclusive — set one",
            ));
        }
        if let Some(synth) = &self.demand.synthetic {
            if synth.scale_min.is_some() != synth.scale_max.is_some() {
                return Err(config_error(
                    "demand.synthetic",
                    "scale_min and scale_max come as a pair",
                ));
            }
        }
        Ok(())
    }

    /// Mechanisms to run; absent means all three.
    pub fn mechanisms(&self) -> Result<Vec<Mechanism>> {
        let Some(tags) = &self.mechanisms else {
            return Ok(Mechanism::ALL.to_vec());
        };
        if tags.is_empty() {
            return Err(config_error("mechanisms", "list is empty"));
        }
        let mut out = Vec::with_capacity(tags.len());
        for tag in tags {
            let mech = Mechanism::from_str(tag)
                .map_err(|e| config_error("mechanisms", e.to_string()))?;
            if !out.contains(&mech) {
                out.push(mech);
            }
        }
        Ok(out)
    }

    /// The training seed, which the contract requires to be explicit.
    pub fn training_seed(&self) -> Result<u64> {
        self.training.seed.ok_or_else(|| {
            config_error(
                "training.seed",
                "training requires an explicit seed (set [training] seed or pass --seed)",
            )
        })
    }
}
