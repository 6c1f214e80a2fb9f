use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong inside the toolkit.
///
/// Variants are split into configuration problems (bad arguments) and data
/// problems (the input cannot support the requested analysis); see
/// [`Error::is_data_error`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {left_name} has {left} values but {right_name} has {right}")]
    LengthMismatch {
        left_name: &'static str,
        left: usize,
        right_name: &'static str,
        right: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value {value} in {what} at row {row}")]
    NonFinite {
        what: &'static str,
        row: usize,
        value: f64,
    },

    #[error("percentage error undefined: ground truth is zero at row {row}")]
    ZeroTruth { row: usize },

    #[error(
        "symmetric percentage error undefined at row {row}: prediction + truth is zero but their difference is not"
    )]
    DegenerateDenominator { row: usize },

    #[error("the omnibus test needs at least 2 groups, got {0}")]
    TooFewGroups(usize),

    #[error("group {0} is empty")]
    EmptyGroup(String),

    #[error("the pooled sample needs at least 4 observations, got {0}")]
    TooFewObservations(usize),

    #[error("the pooled sample is constant; the test statistic is undefined")]
    ConstantSample,

    #[error("unsupported significance level {0}; expected one of 0.25, 0.10, 0.05, 0.025, 0.01")]
    UnsupportedAlpha(f64),

    #[error("exact enumeration needs {needed} assignments, above the limit of {limit}")]
    EnumerationTooLarge { needed: u128, limit: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing column '{0}'")]
    MissingColumn(String),

    #[error("row {row}, column '{column}': cannot parse '{value}' as a number")]
    ParseCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column '{column}': empty cell in a required column")]
    EmptyCell { row: usize, column: String },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn context(self, context: impl Into<String>) -> Error {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True when the failure comes from the data rather than from how the
    /// tool was configured.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::UnsupportedAlpha(_)
            | Error::InvalidArgument(_)
            | Error::EnumerationTooLarge { .. } => false,
            Error::Context { source, .. } => source.is_data_error(),
            _ => true,
        }
    }
}
