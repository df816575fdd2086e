use thiserror::Error;

/// Errors raised while loading, validating or analysing an S-box.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("input holds no table")]
    EmptyInput,
    #[error("table is not square: {rows} rows, row {row} has {cols} tokens")]
    NotSquare { rows: usize, row: usize, cols: usize },
    #[error("table dimension {0} is too small, need at least 2x2")]
    TooSmall(usize),
    #[error("value {value} at row {row}, column {col} is outside [0, {n})")]
    ValueOutOfRange { row: usize, col: usize, value: String, n: usize },
    #[error("token {token:?} at row {row}, column {col} is not an integer")]
    BadToken { row: usize, col: usize, token: String },
    #[error("cell ({row}, {col}) is empty")]
    EmptyCell { row: usize, col: usize },
    #[error("table has empty cells")]
    IncompleteBox,
    #[error("value {value} occurs more than once")]
    DuplicateValue { value: u32 },
    #[error("table size {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("table size {n} exceeds the supported maximum of {max} entries")]
    TableTooLarge { n: usize, max: usize },
    #[error("byte substitution needs a 16x16 table, got {n} entries")]
    NotByteBox { n: usize },

    #[error("probabilities do not form a distribution: {0}")]
    InvalidDistribution(String),
    #[error("no samples to estimate from")]
    EmptySample,

    #[error("known-bit count {r} is outside [0, {width}]")]
    BadR { r: u32, width: u32 },
    #[error("known-bit count {r} leaves no target bit in a {width}-bit word")]
    BadMask { r: u32, width: u32 },
    #[error("stream lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("output stream is not the S-box image of the input at offset {offset}")]
    StreamMismatch { offset: usize },
    #[error("every conditioning pattern fell below the minimum support of {min_support}")]
    InsufficientSupport { min_support: u64 },
    #[error("all input differences are zero")]
    DegenerateData,
    #[error("invalid test configuration: {0}")]
    BadConfig(String),
    #[error("empirical mode needs {0}")]
    MissingData(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
