//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Error`]. The variants are
//! grouped by the layer that raises them (market clearing, learning, data
//! loading, simulation); the CLI maps them onto process exit codes, so the
//! grouping is part of the public contract.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // ---- market clearing -------------------------------------------------
    /// A clearing function was called with no offers at all.
    #[error("offer stack is empty")]
    EmptyStack,

    /// Two offers (or two scenario units) share the same `unit_id`.
    #[error("duplicate unit id `{unit_id}`")]
    DuplicateUnit { unit_id: String },

    /// An offer violates a basic invariant (negative price, non-positive
    /// quantity, non-finite number, ...).
    #[error("invalid offer from unit `{unit_id}`: {reason}")]
    InvalidOffer { unit_id: String, reason: String },

    /// Demand exceeds the total capacity of the offer stack.
    #[error(
        "infeasible market: demand {demand} MWh exceeds offered capacity {capacity} MWh \
         (shortfall {shortfall} MWh)"
    )]
    InfeasibleDemand {
        demand: f64,
        capacity: f64,
        shortfall: f64,
    },

    /// A dispatched unit has no entry in the marginal-cost book, so its
    /// profit cannot be computed.
    #[error("no marginal cost on record for dispatched unit `{unit_id}`")]
    MissingCost { unit_id: String },

    /// An interval of a simulation run could not be cleared.
    #[error("interval {timestamp}: {source}")]
    InfeasibleInterval {
        timestamp: String,
        #[source]
        source: Box<Error>,
    },

    // ---- learning ---------------------------------------------------------
    /// A reward signal was NaN or infinite; the update would poison the table.
    #[error("non-finite reward {reward} for state {state}, action {action}")]
    NonFiniteReward {
        state: usize,
        action: usize,
        reward: f64,
    },

    /// An episode index outside `0..=total` was passed to the exploration
    /// schedule.
    #[error("episode {episode} outside schedule range 0..={total}")]
    EpisodeOutOfRange { episode: u32, total: u32 },

    /// An index (state or action) is out of bounds for the table it addresses.
    #[error("{what} index {index} out of bounds (size {size})")]
    IndexOutOfBounds {
        what: &'static str,
        index: usize,
        size: usize,
    },

    /// A policy file does not match the scenario or run it is applied to.
    #[error("policy mismatch: {detail}")]
    PolicyMismatch { detail: String },

    // ---- data loading and construction -------------------------------------
    /// A CSV file is structurally unusable: missing required columns, no
    /// header, unreadable bytes.
    #[error("bad csv data{}: {detail}", path_suffix(.path))]
    CsvSchema { path: Option<String>, detail: String },

    /// An input collection that must be non-empty was empty.
    #[error("{what} is empty")]
    EmptyInput { what: String },

    /// A unit's offer history cannot yield features (e.g. every offered
    /// quantity is zero, so weighted price and variability are undefined).
    #[error("cannot compute features for unit `{unit_id}`: {reason}")]
    DegenerateFeatures { unit_id: String, reason: String },

    /// More clusters requested than there are points to cluster.
    #[error("k = {k} exceeds the number of points ({points})")]
    KTooLarge { k: usize, points: usize },

    /// No k in the sweep produced a valid set of quality indices.
    #[error("no usable clustering found for k in {k_min}..={k_max}")]
    NoValidClustering { k_min: usize, k_max: usize },

    /// A load curve has zero amplitude, so it cannot be rescaled.
    #[error("load curve is constant ({value} MW); cannot rescale")]
    ConstantCurve { value: f64 },

    /// Load-curve timestamps are not strictly increasing.
    #[error("load curve timestamps not strictly increasing at row {row}")]
    UnorderedCurve { row: usize },

    /// Invalid value in a structured input file (scenario JSON, curve CSV...).
    #[error("invalid {what}: {detail}")]
    InvalidData { what: String, detail: String },

    // ---- aggregate metrics -------------------------------------------------
    /// Markup is undefined when total profit is not strictly below total cost.
    #[error("markup undefined: profit {profit} must be below cost {cost}")]
    InvalidEconomics { profit: f64, cost: f64 },

    /// Profit/cost ratio is undefined for zero total cost.
    #[error("profit/cost ratio undefined: total cost is zero")]
    ZeroCost,

    /// Two series that must be aligned have different lengths.
    #[error("series length mismatch: {left} vs {right} intervals")]
    SeriesMismatch { left: usize, right: usize },

    // ---- passthrough -------------------------------------------------------
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn path_suffix(path: &Option<String>) -> String {
    match path {
        Some(p) => format!(" in {p}"),
        None => String::new(),
    }
}

impl Error {
    /// True for errors caused by malformed or inconsistent input data (as
    /// opposed to infeasible economics or misuse of the API).
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::CsvSchema { .. }
                | Error::EmptyInput { .. }
                | Error::DegenerateFeatures { .. }
                | Error::InvalidData { .. }
                | Error::UnorderedCurve { .. }
                | Error::DuplicateUnit { .. }
                | Error::InvalidOffer { .. }
                | Error::MissingCost { .. }
                | Error::Io(_)
                | Error::Csv(_)
                | Error::Json(_)
        )
    }

    /// True when the market (or an interval of a run) cannot physically clear.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::InfeasibleDemand { .. } | Error::InfeasibleInterval { .. }
        )
    }
}
