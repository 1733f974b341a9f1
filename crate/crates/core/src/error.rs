use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by problem construction, solvers and file formats.
///
/// Row and column indices in messages are 1-based, matching the file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite entry in {matrix} at row {row}, column {col}")]
    NonFinite {
        matrix: &'static str,
        row: usize,
        col: usize,
    },

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("objective diverged at iteration {iteration} (value {value})")]
    Diverged { iteration: usize, value: f64 },

    #[error("spectral norm mode `{mode}` is not available for {kind} maps")]
    NormMode {
        mode: &'static str,
        kind: &'static str,
    },

    #[error("oracle guard violated: {0}")]
    OracleGuard(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: u64,
        msg: String,
    },

    #[error("{file}: invalid field `{field}`: {msg}")]
    Schema {
        file: String,
        field: String,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dims(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        }
    }
}
