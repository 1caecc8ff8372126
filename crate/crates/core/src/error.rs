use thiserror::Error;

/// Errors raised across the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A waveform, grid or format parameter is out of range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The scene cannot be observed with the configured radar (range or velocity guard).
    #[error("scenario error: {0}")]
    Scenario(String),

    /// Inputs to a processing stage do not fit together.
    #[error("processing error: {0}")]
    Processing(String),

    /// Input data contains values that cannot be processed (NaN, infinity).
    #[error("data error: {0}")]
    Data(String),

    /// The range-Doppler map carries no energy.
    #[error("no detection: range-Doppler map is identically zero")]
    NoDetection,

    /// The time-domain oracle refuses instances above its work limit.
    #[error("oracle refused: Q*P*J = {work} exceeds limit {limit}")]
    OracleRefused { work: u64, limit: u64 },

    /// Configuration text could not be parsed or validated.
    #[error("config error at line {line}{}: {message}", key.as_ref().map(|k| format!(" (key `{k}`)")).unwrap_or_default())]
    Config {
        line: usize,
        key: Option<String>,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
