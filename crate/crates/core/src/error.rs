use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("duplicate rating for user {user} and item {item} (line {line})")]
    DuplicateRating { user: u64, item: u64, line: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("privacy budget undefined for a client with no ratings")]
    NoRatings,

    #[error("probability {name} = {value} is on the boundary; the budget is infinite")]
    InfiniteBudget { name: &'static str, value: f64 },

    #[error("degenerate calibration: f = 1 makes the randomized-response system singular")]
    DegenerateCalibration,

    #[error("infeasible calibration: {bound} (p = {p}, q = {q})")]
    InfeasibleCalibration { bound: String, p: f64, q: f64 },

    #[error("client {client}: {source}")]
    Client {
        client: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("coverage of [-{alpha}, {alpha}] is zero; epsilon is unbounded")]
    ZeroCoverage { alpha: f64 },

    #[error("fake error sampling rejected {attempts} consecutive draws (alpha = {alpha}, mu = {mu}, sigma = {sigma})")]
    DegenerateBound {
        attempts: usize,
        alpha: f64,
        mu: f64,
        sigma: f64,
    },

    #[error("truncated frame: need {needed} bytes, have {available}")]
    TruncatedFrame { needed: usize, available: usize },

    #[error("unknown frame type 0x{0:02x}")]
    UnknownFrameType(u8),

    #[error("frame carries K = {actual} but the session uses K = {expected}")]
    SessionMismatch { expected: usize, actual: usize },

    #[error("round {round} aborted: {reason}")]
    RoundAborted { round: usize, reason: String },

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
