//! spaclab-core — a laboratory for comparing electricity-market settlement
//! rules under truthful and learned strategic bidding.
//!
//! The crate is organised in four layers, each usable on its own:
//!
//! * [`market`] — single-interval auction clearing under pay-as-bid,
//!   pay-as-clear, and segmented pay-as-clear rules.
//! * [`agents`] — tabular reinforcement learning of offer markups, one
//!   learner per operator, trained per demand level.
//! * [`scenarios`] — production-unit fleets: a built-in 2030 reference
//!   system, plus a pipeline that turns historical offer data into clustered
//!   technology portfolios.
//! * [`sim`] — load curves and multi-interval simulation runs, with the
//!   comparison metrics used to judge the mechanisms against each other.
//!
//! The commonly used types are re-exported at the crate root.

pub mod agents;
pub mod error;
pub mod market;
pub mod scenarios;
pub mod sim;
mod timeparse;

pub use error::{Error, Result};
pub use market::{
    clear_pab, clear_pac, clear_spac, clear_spac_oracle, compute_profits, sort_merit,
    ClearingOutcome, MarginalCostBook, Mechanism, OutcomeFlags, Segment, SupplyOffer,
};

pub use agents::{
    derive_state_seed, extract_policy, nearest_state_policy, select_action, train_all_states,
    train_state, ActionSpace, EpsilonSchedule, Policy, PolicySet, QTable, StateSpace,
    TrainingConfig, TrainingResult,
};

pub use scenarios::{
    build_operator_portfolios, build_pniec_scenario, classify_segment, compute_unit_features,
    filter_low_activity_units, kmeans_cluster, load_offers_csv, select_k, zscore_normalize,
    ClusteringReport, OfferRecord, ProductionUnit, Scenario, UnitFeatures,
};

pub use sim::{
    average_markup, compare_runs, profit_cost_ratio, scale_load_curve, simulate_day,
    simulate_year, ComparisonMetrics, LoadCurve, MarketSeries, RunResult, Strategy,
};
