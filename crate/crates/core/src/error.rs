use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("model not supported here: {0}")]
    Unsupported(String),

    #[error("previous relay gap {x_prev} lies outside (0, {radius}]")]
    InvalidConditioning { x_prev: f64, radius: f64 },

    #[error("argument {x} exceeds the renewal grid cap {cap}")]
    DomainOverflow { x: f64, cap: f64 },

    #[error("recurrence table too shallow: alpha_max {alpha_max} cannot reach k_max {k_max}")]
    TableUnderflow { alpha_max: usize, k_max: usize },

    #[error("truncation dominates: tail mass {tail_mass} beyond k_max")]
    TruncationDominated { tail_mass: f64 },

    #[error("pole or vanishing denominator at {0}")]
    Pole(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of a numerical method rather than of its inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DomainOverflow { .. }
                | Error::TableUnderflow { .. }
                | Error::TruncationDominated { .. }
                | Error::Pole(_)
                | Error::Convergence(_)
                | Error::FitFailure(_)
        )
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Parse { line, message: format!("{other:?}") },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
