//! Shared error type for all toolkit operations.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} must lie in [{lo}, {hi}], got {value}")]
    ValueOutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("{what} index {index} out of range (size {size})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },
    #[error("no snapshot recorded at time {t}")]
    MissingSnapshot { t: u64 },
    #[error("{what} has length {got}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("need at least two snapshots in window [{start}, {end}]")]
    TooFewSnapshots { start: u64, end: u64 },
    #[error("segment '{which}' is empty")]
    EmptySegment { which: &'static str },
    #[error("segments must be disjoint (human {id} appears in both)")]
    OverlappingSegments { id: u32 },
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("rank {rank} exceeds min(n_humans, n_items) = {max}")]
    RankTooLarge { rank: usize, max: usize },
    #[error("attention budget exhausted for participant {id}")]
    BudgetExhausted { id: u32 },
    #[error("pair vote requires two distinct items, got {id} twice")]
    DuplicatePairItem { id: u32 },
    #[error("cannot convert {requested} of {available} profiles to colluders")]
    TooManyColluders { requested: usize, available: usize },
    #[error("nothing left to elicit for participant {id}")]
    NothingToElicit { id: u32 },
    #[error("uncertainty-weighted elicitation requires an inference model")]
    MissingModel,
    #[error("perspective text must be non-empty")]
    EmptyText,
    #[error("no observations provided")]
    EmptyObservations,
    #[error("holdout split is degenerate: {n_train} train / {n_holdout} holdout")]
    DegenerateSplit { n_train: usize, n_holdout: usize },
    #[error("{what}: got {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("kernel row for {what} {index} sums to {sum}, expected 1 within 1e-9")]
    InvalidKernel {
        what: &'static str,
        index: usize,
        sum: f64,
    },
    #[error("state {state} has no actions")]
    EmptyActionSet { state: usize },
    #[error("candidate set is empty")]
    EmptyCandidates,
    #[error("entailment scorer returned {value} for item {item}, outside [-1, 1]")]
    ScorerOutOfRange { value: f64, item: usize },
    #[error("need at least {min} Monte Carlo trials, got {got}")]
    TooFewTrials { got: usize, min: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("remote scorer: {0}")]
    Remote(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
