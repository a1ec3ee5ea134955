use thiserror::Error;

/// Errors raised while validating problems or running procedures.
///
/// Row, column and family numbers carried by these variants are 1-based so
/// that they can be shown to users unchanged.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GatekeepingError {
    #[error("transition matrix must be square with at least 2 rows, got {rows}x{cols}")]
    MatrixShape { rows: usize, cols: usize },

    #[error("transition matrix diagonal entry g[{row},{row}] = {value} must be 0")]
    NonZeroDiagonal { row: usize, value: f64 },

    #[error("transition matrix row {row} sums to {sum}, expected 1")]
    RowSumNotOne { row: usize, sum: f64 },

    #[error("transition entry g[{row},{col}] = {value} is outside [0, 1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },

    #[error("transition coefficients leaving {family} sum to {sum}, expected 1")]
    CoefficientRowSum { family: String, sum: f64 },

    #[error("transition coefficient {from} -> {to} = {value} is outside [0, 1]")]
    CoefficientOutOfRange {
        from: String,
        to: String,
        value: f64,
    },

    #[error("initial levels sum to {sum}, expected alpha = {alpha}")]
    LevelSumMismatch { sum: f64, alpha: f64 },

    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("family {family} has no hypotheses")]
    EmptyFamily { family: usize },

    #[error("family {family} declares hypothesis label {label:?} more than once")]
    DuplicateHypothesis { family: usize, label: String },

    #[error("family {family} initial level {level} is outside [0, alpha = {alpha}]")]
    LevelOutOfRange {
        family: usize,
        level: f64,
        alpha: f64,
    },

    #[error("global level {0} must lie in (0, 1)")]
    InvalidAlpha(f64),

    #[error("at least {min} families are required, got {found}")]
    TooFewFamilies { min: usize, found: usize },

    #[error("p-value {value} for family {family}, hypothesis {hypothesis} is outside [0, 1]")]
    PValueOutOfRange {
        family: usize,
        hypothesis: usize,
        value: f64,
    },

    #[error("null configuration marks hypothesis {hypothesis} of family {family}, which has only {size}")]
    NullOutOfRange {
        family: usize,
        hypothesis: usize,
        size: usize,
    },

    #[error("index {index} is outside the admissible range {min}..={max}")]
    IndexOutOfRange {
        index: usize,
        min: usize,
        max: usize,
    },

    #[error("invalid model parameter: {0}")]
    InvalidModelParameter(String),

    #[error("replication count must be at least 1")]
    InvalidReplications,

    #[error("stage cap must be at least 1")]
    InvalidStageCap,
}

pub type Result<T> = std::result::Result<T, GatekeepingError>;
