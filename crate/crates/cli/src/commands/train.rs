//! `spaclab train` — learn markup policies for every operator and
//! mechanism, writing tables, greedy policies, and a convergence log.

use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use spaclab_core::agents::{write_episode_log_csv, write_policy_json, write_qtable_json, QTableFile,
    DEFAULT_STATES};
use spaclab_core::scenarios::Scenario;
use spaclab_core::{train_all_states, Mechanism, StateSpace, TrainingConfig, TrainingResult};

use crate::commands::resolve_scenario;
use crate::config::{config_error, ExperimentConfig};

pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let scenario = resolve_scenario(config)?;
    let mechanisms = config.mechanisms()?;
    let seed = config.training_seed()?;

    let n_states = config.training.states.unwrap_or(DEFAULT_STATES);
    let states = StateSpace::new(scenario.total_capacity_mw(), n_states)?;
    let log_state = config.training.log_state.unwrap_or(n_states / 2);
    if log_state >= n_states {
        return Err(config_error(
            "training.log_state",
            format!("state {log_state} is out of range (grid has {n_states} levels)"),
        ));
    }

    for &mechanism in &mechanisms {
        let training = training_config(config, mechanism, seed);
        let started = Instant::now();
        let result = train_all_states(&scenario, &training, &states, Some(log_state))?;
        let elapsed = started.elapsed();
        write_artifacts(&result, &scenario, out_dir)?;
        println!(
            "{mechanism}: {n_states} demand levels × {} episodes for {} operators in {:.2}s",
            training.episodes,
            scenario.operators().len(),
            elapsed.as_secs_f64()
        );
    }
    Ok(())
}

/// Builds the core training configuration from the merged experiment
/// config, falling back to the engine defaults field by field.
pub fn training_config(
    config: &ExperimentConfig,
    mechanism: Mechanism,
    seed: u64,
) -> TrainingConfig {
    let mut training = TrainingConfig::new(mechanism, seed);
    if let Some(episodes) = config.training.episodes {
        training.episodes = episodes;
    }
    if let Some(eps_max) = config.training.eps_max {
        training.eps_max = eps_max;
    }
    if let Some(eps_min) = config.training.eps_min {
        training.eps_min = eps_min;
    }
    training.markup_grid = config.training.markup_grids.get(mechanism.tag()).cloned();
    training
}

fn write_artifacts(result: &TrainingResult, scenario: &Scenario, out_dir: &Path) -> Result<()> {
    let tag = result.mechanism.tag();
    for operator in scenario.operators() {
        let table = QTableFile::from_training(result, &operator)?;
        write_qtable_json(out_dir.join(format!("qtable_{tag}_{operator}.json")), &table)?;
    }
    for policy in result.policies()? {
        write_policy_json(
            out_dir.join(format!("policy_{tag}_{}.json", policy.operator_id)),
            &policy,
        )?;
    }
    if let Some((_, records)) = &result.episode_log {
        write_episode_log_csv(out_dir.join(format!("convergence_{tag}.csv")), records)?;
    }
    Ok(())
}
