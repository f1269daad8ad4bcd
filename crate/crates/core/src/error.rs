use thiserror::Error;

/// Errors raised by the estimators, the simulation lab and the finance pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("predictor column {column} is constant; its centered column is identically zero")]
    DegenerateColumn { column: usize },

    #[error("Gram matrix {which} is numerically singular (condition estimate {condition:.3e})")]
    SingularGram { which: &'static str, condition: f64 },

    #[error("denominator sum |x| is zero")]
    ZeroDenominator,

    #[error("standard error must be strictly positive, got {0}")]
    ZeroSE(f64),

    #[error("only {in_band} residuals inside the bandwidth, need at least {required}")]
    EmptyBand { in_band: usize, required: usize },

    #[error("quantile solver did not converge after {iterations} iterations (max dual violation {violation:.3e})")]
    SolverFail { iterations: usize, violation: f64 },

    #[error("variance-scaled predictors need nu > 2, got {nu}")]
    ModeMismatch { nu: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate row for date {date} and ticker {ticker}")]
    DuplicateRow { line: usize, date: String, ticker: String },

    #[error("index ticker {ticker} has no price on {date}")]
    MissingIndex { ticker: String, date: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerical kind (singular systems, empty
    /// kernel bands, solver breakdown) as opposed to malformed input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::DegenerateColumn { .. }
                | Error::SingularGram { .. }
                | Error::ZeroDenominator
                | Error::ZeroSE(_)
                | Error::EmptyBand { .. }
                | Error::SolverFail { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
