//! The four subcommands plus the plumbing they share: scenario and curve
//! resolution, the output directory, and the run-metadata file.

pub mod clear;
pub mod cluster;
pub mod simulate;
pub mod train;

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use serde::Serialize;
use spaclab_core::scenarios::{build_pniec_scenario, read_scenario_json, Scenario};
use spaclab_core::sim::{
    read_load_curve_csv, scale_load_curve, synthetic_day_curve, synthetic_year_curve, LoadCurve,
};

use crate::config::{config_error, ExperimentConfig};

pub const BUILTIN_SCENARIO: &str = "pniec2030";

/// Output directory precedence: `--out-dir` flag, then the config file,
/// then `$SPACLAB_OUT_DIR`, then `./spaclab-out`.
pub fn resolve_out_dir(flag: Option<PathBuf>, config: &ExperimentConfig) -> Result<PathBuf> {
    let dir = flag
        .or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os("SPACLAB_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("spaclab-out"));
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    Ok(dir)
}

/// Builds the fleet named by the config. The clustering source re-runs the
/// full offers → portfolio pipeline and is therefore the slow path.
pub fn resolve_scenario(config: &ExperimentConfig) -> Result<Scenario> {
    let source = &config.scenario;
    if let Some(builtin) = &source.builtin {
        return match builtin.as_str() {
            BUILTIN_SCENARIO => Ok(build_pniec_scenario()),
            other => Err(config_error(
                "scenario.builtin",
                format!("unknown built-in `{other}` (available: {BUILTIN_SCENARIO})"),
            )),
        };
    }
    if let Some(path) = &source.path {
        return read_scenario_json(path)
            .with_context(|| format!("reading scenario {}", path.display()));
    }
    if source.offers_csv.is_some() {
        return Ok(cluster::run_pipeline(config)?.scenario);
    }
    Ok(build_pniec_scenario())
}

/// Resolves the simulation load curve: a CSV path or synthetic parameters.
pub fn resolve_curve(config: &ExperimentConfig) -> Result<LoadCurve> {
    if let Some(path) = &config.demand.curve {
        return read_load_curve_csv(path)
            .with_context(|| format!("reading load curve {}", path.display()));
    }
    let Some(synth) = &config.demand.synthetic else {
        return Err(config_error(
            "demand",
            "simulate needs a load curve (set [demand] curve or [demand.synthetic], \
             or pass --curve / --synthetic-day / --synthetic-year)",
        ));
    };

    let seed = synth.seed.ok_or_else(|| {
        config_error(
            "demand.synthetic.seed",
            "synthetic curve generation requires an explicit seed",
        )
    })?;
    let base_mw = synth.base_mw.unwrap_or(300.0);
    let peak_mw = synth.peak_mw.unwrap_or(1000.0);

    let curve = match synth.span.as_deref() {
        Some("day") => {
            let date_text = synth.date.as_deref().ok_or_else(|| {
                config_error("demand.synthetic.date", "span = \"day\" needs a date")
            })?;
            let date = chrono::NaiveDate::parse_from_str(date_text, "%Y-%m-%d")
                .map_err(|e| {
                    config_error(
                        "demand.synthetic.date",
                        format!("`{date_text}` is not YYYY-MM-DD: {e}"),
                    )
                })?;
            synthetic_day_curve(date, base_mw, peak_mw, seed)?
        }
        Some("year") => {
            let year = synth.year.ok_or_else(|| {
                config_error("demand.synthetic.year", "span = \"year\" needs a year")
            })?;
            synthetic_year_curve(year, base_mw, peak_mw, seed)?
        }
        Some(other) => {
            return Err(config_error(
                "demand.synthetic.span",
                format!("`{other}` is not `day` or `year`"),
            ))
        }
        None => {
            return Err(config_error(
                "demand.synthetic.span",
                "set span to `day` or `year`",
            ))
        }
    };

    match (synth.scale_min, synth.scale_max) {
        (Some(lo), Some(hi)) => Ok(scale_load_curve(&curve, lo, hi)?),
        _ => Ok(curve),
    }
}

/// What one run wrote and when. The only file that carries timestamps, so
/// every other artifact is byte-identical across reruns of the same
/// config and seed.
#[derive(Debug, Serialize)]
pub struct RunMetadata<'a> {
    pub command: &'static str,
    pub version: &'static str,
    pub started_utc: String,
    pub wall_clock_seconds: f64,
    /// Master seed the command consumed, if it used randomness.
    pub master_seed: Option<u64>,
    /// The fully merged configuration this run actually used.
    pub config: &'a ExperimentConfig,
}

pub fn write_metadata(
    out_dir: &Path,
    command: &'static str,
    master_seed: Option<u64>,
    config: &ExperimentConfig,
    started_utc: chrono::DateTime<chrono::Utc>,
    elapsed: Duration,
) -> Result<()> {
    let meta = RunMetadata {
        command,
        version: env!("CARGO_PKG_VERSION"),
        started_utc: started_utc.to_rfc3339(),
        wall_clock_seconds: elapsed.as_secs_f64(),
        master_seed,
        config,
    };
    write_json(&out_dir.join("metadata.json"), &meta)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .with_context(|| format!("serializing {}", path.display()))?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
