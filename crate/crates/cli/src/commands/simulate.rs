//! `spaclab simulate` — run a load curve through the selected mechanisms
//! and strategies, then write interval, summary, and comparison files.

use std::path::Path;

use anyhow::{Context, Result};
use spaclab_core::agents::read_policy_json;
use spaclab_core::scenarios::Scenario;
use spaclab_core::sim::{simulate_day, simulate_year, write_intervals_csv, RunResult, Strategy};
use spaclab_core::{compare_runs, train_all_states, Mechanism, PolicySet, StateSpace};

use crate::commands::{resolve_curve, resolve_scenario, write_json};
use crate::config::{config_error, ExperimentConfig};

pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let scenario = resolve_scenario(config)?;
    let mechanisms = config.mechanisms()?;
    let curve = resolve_curve(config)?;

    let (strategies, policies) = resolve_strategies(config, &scenario, &mechanisms)?;
    let samples = curve.samples();
    let single_day = samples[0].0.date() == samples[samples.len() - 1].0.date();
    let run = if single_day {
        simulate_day(&scenario, &curve, &mechanisms, &strategies, policies.as_ref())?
    } else {
        simulate_year(&scenario, &curve, &mechanisms, &strategies, policies.as_ref())?
    };

    write_intervals_csv(out_dir.join("intervals.csv"), &run)?;
    let summary = run.summary();
    write_json(&out_dir.join("summary.json"), &summary)?;
    write_comparisons(&run, &mechanisms, &strategies, out_dir)?;

    println!(
        "{} — {} intervals ({})",
        scenario.name(),
        run.intervals(),
        if single_day { "single day" } else { "multi-day" }
    );
    println!(
        "{:<6} {:<9} {:>16} {:>13} {:>16}",
        "rule", "strategy", "cost €", "mean €/MWh", "profit €"
    );
    for series in &summary.series {
        println!(
            "{:<6} {:<9} {:>16.2} {:>13.2} {:>16.2}",
            series.mechanism.to_string(),
            series.strategy.to_string(),
            series.total_cost,
            series.mean_pun,
            series.total_profit,
        );
    }
    Ok(())
}

/// Turns the `strategy` setting into the strategy list and, when needed,
/// the policy set: `marginal` runs cost offers only; `policy` loads
/// trained policy files; `train` learns them in-memory first. The last two
/// also run the marginal baseline so the comparison files have both sides.
fn resolve_strategies(
    config: &ExperimentConfig,
    scenario: &Scenario,
    mechanisms: &[Mechanism],
) -> Result<(Vec<Strategy>, Option<PolicySet>)> {
    match config.strategy.as_deref().unwrap_or("marginal") {
        "marginal" => Ok((vec![Strategy::Marginal], None)),
        "policy" => {
            let dir = config.policies.as_ref().ok_or_else(|| {
                config_error(
                    "policies",
                    "strategy = \"policy\" needs the directory holding policy files",
                )
            })?;
            let policies = load_policy_dir(dir, scenario, mechanisms)?;
            Ok((vec![Strategy::Marginal, Strategy::Policy], Some(policies)))
        }
        "train" => {
            let seed = config.training_seed()?;
            let n_states = config
                .training
                .states
                .unwrap_or(spaclab_core::agents::DEFAULT_STATES);
            let states = StateSpace::new(scenario.total_capacity_mw(), n_states)?;
            let mut policies = PolicySet::new();
            for &mechanism in mechanisms {
                let training = super::train::training_config(config, mechanism, seed);
                let result = train_all_states(scenario, &training, &states, None)?;
                for policy in result.policies()? {
                    policies.insert(policy)?;
                }
            }
            Ok((vec![Strategy::Marginal, Strategy::Policy], Some(policies)))
        }
        other => Err(config_error(
            "strategy",
            format!("`{other}` is not marginal, policy, or train"),
        )),
    }
}

/// Reads every `policy_<mechanism>_<operator>.json` the run needs from
/// `dir`. Missing or mismatched files surface as policy errors naming the
/// operator, so pointing at policies trained for a different fleet fails
/// loudly instead of silently offering at cost.
fn load_policy_dir(
    dir: &Path,
    scenario: &Scenario,
    mechanisms: &[Mechanism],
) -> Result<PolicySet> {
    let mut policies = PolicySet::new();
    for &mechanism in mechanisms {
        for operator in scenario.operators() {
            let path = dir.join(format!("policy_{}_{operator}.json", mechanism.tag()));
            if !path.exists() {
                return Err(spaclab_core::Error::PolicyMismatch {
                    detail: format!(
                        "no policy file for operator `{operator}` under {mechanism} \
                         (expected {})",
                        path.display()
                    ),
                }
                .into());
            }
            let policy = read_policy_json(&path)
                .with_context(|| format!("reading policy {}", path.display()))?;
            policies.insert(policy)?;
        }
    }
    Ok(policies)
}

/// Comparison files: policy-vs-marginal per mechanism, and the segmented
/// rule against the uniform rule per strategy when both ran.
fn write_comparisons(
    run: &RunResult,
    mechanisms: &[Mechanism],
    strategies: &[Strategy],
    out_dir: &Path,
) -> Result<()> {
    let both_strategies =
        strategies.contains(&Strategy::Marginal) && strategies.contains(&Strategy::Policy);
    if both_strategies {
        for &mechanism in mechanisms {
            let baseline = run.series_for(mechanism, Strategy::Marginal);
            let strategic = run.series_for(mechanism, Strategy::Policy);
            if let (Some(baseline), Some(strategic)) = (baseline, strategic) {
                let metrics = compare_runs(baseline, strategic)?;
                let file = format!("metrics_{}_policy_vs_marginal.json", mechanism.tag());
                write_json(&out_dir.join(file), &metrics)?;
            }
        }
    }
    if mechanisms.contains(&Mechanism::PayAsClear)
        && mechanisms.contains(&Mechanism::SegmentedPayAsClear)
    {
        for &strategy in strategies {
            let uniform = run.series_for(Mechanism::PayAsClear, strategy);
            let segmented = run.series_for(Mechanism::SegmentedPayAsClear, strategy);
            if let (Some(uniform), Some(segmented)) = (uniform, segmented) {
                let metrics = compare_runs(uniform, segmented)?;
                let file = format!("metrics_spac_vs_pac_{strategy}.json");
                write_json(&out_dir.join(file), &metrics)?;
            }
        }
    }
    Ok(())
}
