//! `spaclab` — configuration-driven experiments on electricity-market
//! settlement rules: clear one demand, train markup policies, simulate
//! load curves, or cluster an offer history into portfolios.
//!
//! Every command reads an optional TOML experiment file (`--config`) and
//! merges command-line flags over it — flags always win. Outputs land in
//! one directory per run; `metadata.json` records the merged config, the
//! master seed, and the wall clock, and is the only file with timestamps,
//! so reruns with the same config and seed are byte-identical elsewhere.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 infeasible
//! market (demand above capacity), 4 malformed data, 1 anything else.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::commands::{resolve_out_dir, write_metadata};
use crate::config::{
    config_error, load_config, ConfigError, DemandSource, ExperimentConfig, ScenarioSource,
};

#[derive(Parser)]
#[command(name = "spaclab", version, about, propagate_version = true)]
struct Cli {
    /// Experiment config file (TOML); flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory [defaults: $SPACLAB_OUT_DIR, then ./spaclab-out].
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Settle a single demand under each mechanism and write the outcomes.
    Clear(ClearArgs),
    /// Train markup policies; write tables, policies, and a convergence log.
    Train(TrainArgs),
    /// Run a load curve; write interval, summary, and comparison files.
    Simulate(SimulateArgs),
    /// Cluster an offer history into portfolios; write report and scenario.
    Cluster(ClusterArgs),
}

#[derive(Args)]
struct ScenarioArg {
    /// Fleet to use: `pniec2030`, a scenario JSON, or an offer-history CSV.
    #[arg(long, value_name = "NAME|FILE")]
    scenario: Option<String>,
}

impl ScenarioArg {
    fn apply(&self, config: &mut ExperimentConfig) {
        let Some(value) = &self.scenario else { return };
        let mut source = ScenarioSource::default();
        if value.ends_with(".json") {
            source.path = Some(value.into());
        } else if value.ends_with(".csv") {
            source.offers_csv = Some(value.into());
        } else {
            source.builtin = Some(value.clone());
        }
        config.scenario = source;
    }
}

#[derive(Args)]
struct MechanismsArg {
    /// Comma-separated mechanism tags: pab, pac, spac (default: all).
    #[arg(long, value_name = "TAGS", value_delimiter = ',')]
    mechanisms: Option<Vec<String>>,
}

impl MechanismsArg {
    fn apply(&self, config: &mut ExperimentConfig) {
        if self.mechanisms.is_some() {
            config.mechanisms = self.mechanisms.clone();
        }
    }
}

#[derive(Args)]
struct ClearArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    #[command(flatten)]
    mechanisms: MechanismsArg,
    /// Demand to clear, in MWh.
    #[arg(long, value_name = "MWH")]
    demand: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    #[command(flatten)]
    mechanisms: MechanismsArg,
    /// Episodes per demand level.
    #[arg(long)]
    episodes: Option<u32>,
    /// Exploration rate at the first episode.
    #[arg(long)]
    eps_max: Option<f64>,
    /// Exploration rate at the last episode.
    #[arg(long)]
    eps_min: Option<f64>,
    /// Number of demand levels in the state grid.
    #[arg(long)]
    states: Option<usize>,
    /// Master seed (required).
    #[arg(long)]
    seed: Option<u64>,
    /// State index recorded in the convergence log (default: grid middle).
    #[arg(long, value_name = "INDEX")]
    log_state: Option<usize>,
}

impl TrainArgs {
    fn apply(&self, config: &mut ExperimentConfig) {
        self.scenario.apply(config);
        self.mechanisms.apply(config);
        let training = &mut config.training;
        merge(&mut training.episodes, self.episodes);
        merge(&mut training.eps_max, self.eps_max);
        merge(&mut training.eps_min, self.eps_min);
        merge(&mut training.states, self.states);
        merge(&mut training.seed, self.seed);
        merge(&mut training.log_state, self.log_state);
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    #[command(flatten)]
    mechanisms: MechanismsArg,
    /// Offer strategy: marginal, policy, or train.
    #[arg(long)]
    strategy: Option<String>,
    /// Directory with `policy_<mechanism>_<operator>.json` files.
    #[arg(long, value_name = "DIR")]
    policies: Option<PathBuf>,
    /// Load-curve CSV (`timestamp_iso8601,demand_mw`).
    #[arg(long, value_name = "FILE", conflicts_with_all = ["synthetic_day", "synthetic_year"])]
    curve: Option<PathBuf>,
    /// Generate one synthetic day (YYYY-MM-DD).
    #[arg(long, value_name = "DATE", conflicts_with = "synthetic_year")]
    synthetic_day: Option<String>,
    /// Generate one synthetic year.
    #[arg(long, value_name = "YEAR")]
    synthetic_year: Option<i32>,
    /// Synthetic curve floor, MW.
    #[arg(long)]
    base_mw: Option<f64>,
    /// Synthetic curve peak, MW.
    #[arg(long)]
    peak_mw: Option<f64>,
    /// Seed of the synthetic curve noise.
    #[arg(long)]
    curve_seed: Option<u64>,
    /// Rescale the curve to this minimum (pairs with --scale-max).
    #[arg(long)]
    scale_min: Option<f64>,
    /// Rescale the curve to this maximum (pairs with --scale-min).
    #[arg(long)]
    scale_max: Option<f64>,
    /// Master seed for --strategy train.
    #[arg(long)]
    seed: Option<u64>,
    /// Episodes per demand level for --strategy train.
    #[arg(long)]
    episodes: Option<u32>,
    /// Demand levels in the state grid for --strategy train.
    #[arg(long)]
    states: Option<usize>,
}

impl SimulateArgs {
    fn apply(&self, config: &mut ExperimentConfig) {
        self.scenario.apply(config);
        self.mechanisms.apply(config);
        merge(&mut config.strategy, self.strategy.clone());
        merge(&mut config.policies, self.policies.clone());
        merge(&mut config.training.seed, self.seed);
        merge(&mut config.training.episodes, self.episodes);
        merge(&mut config.training.states, self.states);

        if let Some(curve) = &self.curve {
            config.demand = DemandSource {
                curve: Some(curve.clone()),
                ..Default::default()
            };
        }
        if self.synthetic_day.is_some() || self.synthetic_year.is_some() {
            let mut synth = config.demand.synthetic.clone().unwrap_or_default();
            if let Some(date) = &self.synthetic_day {
                synth.span = Some("day".into());
                synth.date = Some(date.clone());
                synth.year = None;
            }
            if let Some(year) = self.synthetic_year {
                synth.span = Some("year".into());
                synth.year = Some(year);
                synth.date = None;
            }
            config.demand = DemandSource {
                synthetic: Some(synth),
                ..Default::default()
            };
        }
        let knobs = [
            self.base_mw.is_some(),
            self.peak_mw.is_some(),
            self.curve_seed.is_some(),
            self.scale_min.is_some(),
            self.scale_max.is_some(),
        ];
        if knobs.iter().any(|&set| set) {
            let synth = config.demand.synthetic.get_or_insert_with(Default::default);
            merge(&mut synth.base_mw, self.base_mw);
            merge(&mut synth.peak_mw, self.peak_mw);
            merge(&mut synth.seed, self.curve_seed);
            merge(&mut synth.scale_min, self.scale_min);
            merge(&mut synth.scale_max, self.scale_max);
        }
    }
}

#[derive(Args)]
struct ClusterArgs {
    /// Offer-history CSV to cluster.
    #[arg(long, value_name = "FILE")]
    offers: Option<PathBuf>,
    /// Smallest cluster count to try.
    #[arg(long)]
    k_min: Option<usize>,
    /// Largest cluster count to try.
    #[arg(long)]
    k_max: Option<usize>,
    /// Drop units below this offer-count percentile (0..1).
    #[arg(long)]
    percentile: Option<f64>,
    /// Seed of the k-means initialisation (required).
    #[arg(long)]
    seed: Option<u64>,
    /// Marginal-cost threshold separating the two segments, €/MWh.
    #[arg(long, value_name = "EUR_MWH")]
    threshold: Option<f64>,
    /// Name of the derived scenario.
    #[arg(long)]
    name: Option<String>,
}

impl ClusterArgs {
    fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(offers) = &self.offers {
            config.scenario = ScenarioSource {
                offers_csv: Some(offers.clone()),
                ..Default::default()
            };
        }
        let clustering = &mut config.clustering;
        merge(&mut clustering.k_min, self.k_min);
        merge(&mut clustering.k_max, self.k_max);
        merge(&mut clustering.activity_percentile, self.percentile);
        merge(&mut clustering.seed, self.seed);
        merge(&mut clustering.segment_threshold_eur_mwh, self.threshold);
        merge(&mut clustering.scenario_name, self.name.clone());
    }
}

/// Overwrites `slot` only when the flag was actually given.
fn merge<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(workers) = cli.workers {
        config.workers = Some(workers);
    }
    if let Some(workers) = config.workers {
        if workers == 0 {
            return Err(config_error("workers", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| config_error("workers", e.to_string()))?;
    }

    let started = chrono::Utc::now();
    let timer = Instant::now();
    let (name, master_seed) = match &cli.command {
        Command::Clear(args) => {
            args.scenario.apply(&mut config);
            args.mechanisms.apply(&mut config);
            if args.demand.is_some() {
                config.demand = DemandSource {
                    value: args.demand,
                    ..Default::default()
                };
            }
            ("clear", None)
        }
        Command::Train(args) => {
            args.apply(&mut config);
            ("train", config.training.seed)
        }
        Command::Simulate(args) => {
            args.apply(&mut config);
            let seed = match config.strategy.as_deref() {
                Some("train") => config.training.seed,
                _ => config.demand.synthetic.as_ref().and_then(|s| s.seed),
            };
            ("simulate", seed)
        }
        Command::Cluster(args) => {
            args.apply(&mut config);
            ("cluster", config.clustering.seed)
        }
    };

    config.validate()?;
    let out_dir = resolve_out_dir(cli.out_dir, &config)?;
    match &cli.command {
        Command::Clear(_) => commands::clear::run(&config, &out_dir)?,
        Command::Train(_) => commands::train::run(&config, &out_dir)?,
        Command::Simulate(_) => commands::simulate::run(&config, &out_dir)?,
        Command::Cluster(_) => commands::cluster::run(&config, &out_dir)?,
    }
    write_metadata(&out_dir, name, master_seed, &config, started, timer.elapsed())
}

/// Contract: 2 configuration, 3 infeasible market, 4 bad data, 1 the rest.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    if let Some(core) = err.downcast_ref::<spaclab_core::Error>() {
        if core.is_infeasible() {
            return 3;
        }
        // Policies that do not fit the scenario are a wiring problem, not
        // a data problem: the user pointed the run at the wrong files.
        if matches!(core, spaclab_core::Error::PolicyMismatch { .. }) {
            return 2;
        }
        if core.is_data_error() {
            return 4;
        }
    }
    1
}
