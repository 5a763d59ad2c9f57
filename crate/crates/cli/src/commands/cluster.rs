//! `spaclab cluster` — turn an offer-history CSV into technology
//! portfolios: activity filter, per-unit features, z-scoring, k sweep,
//! and the derived scenario.

use std::path::Path;

use anyhow::{Context, Result};
use spaclab_core::scenarios::{
    build_operator_portfolios, build_unit_profiles, feature_matrix, load_offers_csv,
    zscore_normalize, ActivityFilter, RejectedRow, Scenario, UnitFeatures,
    SEGMENT_THRESHOLD_EUR_MWH,
};
use spaclab_core::{filter_low_activity_units, select_k, ClusteringReport};

use crate::commands::write_json;
use crate::config::{config_error, ExperimentConfig};

pub struct ClusterArtifacts {
    pub scenario: Scenario,
    pub report: ClusteringReport,
    pub filter: ActivityFilter,
    pub rejected: Vec<RejectedRow>,
    /// Units whose histories were degenerate and were skipped.
    pub skipped: Vec<String>,
}

/// The full pipeline, shared with scenario resolution so `train` and
/// `simulate` can consume an offers CSV directly.
pub fn run_pipeline(config: &ExperimentConfig) -> Result<ClusterArtifacts> {
    let path = config.scenario.offers_csv.as_ref().ok_or_else(|| {
        config_error(
            "scenario.offers_csv",
            "clustering needs an offer-history CSV (set [scenario] offers_csv or pass --offers)",
        )
    })?;
    let seed = config.clustering.seed.ok_or_else(|| {
        config_error(
            "clustering.seed",
            "clustering requires an explicit seed (set [clustering] seed or pass --seed)",
        )
    })?;
    let section = &config.clustering;
    let percentile = section.activity_percentile.unwrap_or(0.2);
    let k_min = section.k_min.unwrap_or(2);
    let k_max = section.k_max.unwrap_or(8);
    let threshold = section
        .segment_threshold_eur_mwh
        .unwrap_or(SEGMENT_THRESHOLD_EUR_MWH);
    let name = section.scenario_name.as_deref().unwrap_or("derived");

    let load = load_offers_csv(path)
        .with_context(|| format!("loading offer history {}", path.display()))?;
    let (kept, filter) = filter_low_activity_units(&load.records, percentile)?;
    let (profiles, skipped) = build_unit_profiles(&kept)?;
    let matrix = feature_matrix(&profiles);
    let z = zscore_normalize(&matrix)?;
    for &column in &z.constant_columns {
        eprintln!(
            "warning: feature `{}` is constant across every unit and carries no signal",
            UnitFeatures::NAMES[column]
        );
    }
    let report = select_k(&z.matrix, k_min, k_max, seed)?;
    let scenario = build_operator_portfolios(&profiles, &report.assignments, threshold, name)?;
    Ok(ClusterArtifacts {
        scenario,
        report,
        filter,
        rejected: load.rejected,
        skipped,
    })
}

pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let artifacts = run_pipeline(config)?;

    write_json(&out_dir.join("clustering_report.json"), &artifacts.report)?;
    spaclab_core::scenarios::write_scenario_json(
        out_dir.join("scenario.json"),
        &artifacts.scenario,
    )?;
    if !artifacts.rejected.is_empty() {
        write_json(&out_dir.join("rejected_rows.json"), &artifacts.rejected)?;
        eprintln!(
            "warning: {} malformed rows were skipped (see rejected_rows.json)",
            artifacts.rejected.len()
        );
    }
    if !artifacts.skipped.is_empty() {
        eprintln!(
            "warning: {} units had degenerate histories and were skipped: {}",
            artifacts.skipped.len(),
            artifacts.skipped.join(", ")
        );
    }

    let report = &artifacts.report;
    let mut sizes = vec![0usize; report.chosen_k];
    for &assignment in &report.assignments {
        sizes[assignment] += 1;
    }
    println!(
        "{} units kept ({} dropped by the activity filter), k swept {}..={}",
        artifacts.filter.kept_units,
        artifacts.filter.removed_units.len(),
        report.k_min,
        report.k_max
    );
    println!(
        "chose k = {} — cluster sizes {:?}, scenario `{}` with {} operators",
        report.chosen_k,
        sizes,
        artifacts.scenario.name(),
        artifacts.scenario.operators().len()
    );
    Ok(())
}
