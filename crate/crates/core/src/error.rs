use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("required column `{0}` not found in header")]
    MissingColumn(String),

    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),

    #[error("unknown term `{0}`")]
    UnknownTerm(String),

    #[error("a model needs at least one term")]
    EmptyModel,

    #[error("record `{record}` has no value for variable `{variable}`")]
    MissingValue { record: String, variable: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NonConvergence { sweeps: usize, off_norm: f64 },

    #[error("design matrix is rank-deficient; dependent columns: {}", .columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("column `{0}` has zero variance")]
    ZeroVariance(String),

    #[error("vector is identically zero")]
    ZeroVector,

    #[error("target variable `{0}` does not appear in the model")]
    TargetAbsent(String),

    #[error("quadratic has no real roots")]
    ComplexRoots,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("all conic coefficients vanish")]
    EmptyForm,

    #[error("invalid category scale: {0}")]
    Scale(String),
}

impl Error {
    /// True for failures caused by unreadable or malformed input, as opposed
    /// to failures inside the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io(_)
                | Error::Csv(_)
                | Error::Json(_)
                | Error::Format { .. }
                | Error::MissingColumn(_)
                | Error::Scale(_)
        )
    }
}
