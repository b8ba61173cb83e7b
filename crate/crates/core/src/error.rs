use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value at cell (row {row}, col {col})")]
    NonFinite { row: usize, col: usize },

    #[error("input out of range [-1, 1] at cell (row {row}, col {col}): {value}")]
    InputOutOfRange { row: usize, col: usize, value: f64 },

    #[error("dimension mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    DimensionMismatch {
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },

    #[error("non-binary operand at cell (row {row}, col {col}): {value}")]
    NonBinary { row: usize, col: usize, value: f64 },

    #[error("invalid template: {0}")]
    InvalidTemplate(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("template `{name}` did not settle within {budget_ns} ns")]
    NotSettled { name: String, budget_ns: f64 },

    #[error("bounding box {0} lies outside the {1}x{2} frame")]
    BoxOutsideFrame(String, usize, usize),

    #[error("bounding box covers no cells")]
    EmptyBox,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("covariance matrix is not positive semidefinite")]
    NotPositiveSemidefinite,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),
}
