use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing required config key(s): {}", .0.join(", "))]
    MissingKeys(Vec<String>),

    #[error("line {line}: duplicate key {key} (first defined on line {first_line})")]
    DuplicateKey {
        key: String,
        line: usize,
        first_line: usize,
    },

    #[error("line {line}: {key}: expected {expected}, found {found:?}")]
    TypeMismatch {
        key: String,
        line: usize,
        expected: &'static str,
        found: String,
    },

    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Constraint(String),

    #[error("row {row}, column {column}: {message}")]
    Csv {
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("time {t} outside of series span [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("integration failed at t = {t}: {message}")]
    Integration { t: f64, message: String },

    #[error("oracle invalid at t = {t}: off-track drift {drift:e} m exceeds {limit:e} m")]
    OracleInvalid { t: f64, drift: f64, limit: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Integration { .. } | Error::OracleInvalid { .. })
    }
}
