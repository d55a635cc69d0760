use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid period scheme: {0}")]
    InvalidScheme(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate date {date} on line {line}")]
    DuplicateDate { date: NaiveDate, line: usize },

    #[error("line {line}: negative rainfall {value} on {date}; run QC or parse leniently to record it as missing")]
    NegativeRain {
        date: NaiveDate,
        value: f64,
        line: usize,
    },

    #[error("empty sample")]
    EmptySample,

    #[error("insufficient data for fit: {n} values, need at least {min}")]
    FitInsufficientData { n: usize, min: usize },

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("model fit did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NonConvergence {
        iterations: usize,
        gradient_norm: f64,
        trace: Vec<f64>,
    },

    #[error("series do not overlap")]
    NoOverlap,

    #[error("{0}")]
    Mismatch(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
