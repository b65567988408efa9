use thiserror::Error;

/// Errors raised anywhere in the fit/decompose/render pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: expected {}", expected.join(" or "))]
    Syntax { offset: usize, expected: Vec<String> },

    #[error("duplicate term `{0}` in formula")]
    DuplicateTerm(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("column `{column}`: {reason}")]
    ColumnType { column: String, reason: String },

    #[error("csv: {0}")]
    Csv(String),

    #[error("no complete cases for columns {0:?}")]
    NoCompleteCases(Vec<String>),

    #[error("categorical column `{0}` has a single level; at least two are required")]
    SingleLevel(String),

    #[error("log of non-positive value {value} in column `{column}`")]
    NonPositiveLog { column: String, value: f64 },

    #[error("reciprocal of zero in response `{0}`")]
    ZeroReciprocal(String),

    #[error("design is rank deficient; aliased columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("underdetermined fit: {n} rows for {k} coefficients plus intercept")]
    Underdetermined { n: usize, k: usize },

    #[error("binary response `{0}` must contain both 0 and 1")]
    OneClass(String),

    #[error("binary response `{column}` has value {value}; expected 0 or 1")]
    NotBinary { column: String, value: f64 },

    #[error("unseen level `{level}` for column `{column}`")]
    UnseenLevel { column: String, level: String },

    #[error("missing value for column(s): {}", .0.join(", "))]
    MissingField(Vec<String>),

    #[error("model: {0}")]
    Model(String),

    #[error("case index {index} out of range 1..={n}")]
    CaseIndex { index: usize, n: usize },

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
