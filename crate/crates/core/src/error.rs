use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },

    #[error("line {line}: timestamp {time} precedes the previous event")]
    Unsorted { line: usize, time: f64 },

    #[error("line {line}: duplicate {side} timestamp {time}")]
    DuplicateTimestamp { line: usize, side: &'static str, time: f64 },

    #[error("line {line}: unknown side token `{token}` (expected `B` or `S`)")]
    UnknownSide { line: usize, token: String },

    #[error("invalid header: expected `time,side,price,size`, found `{0}`")]
    Header(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid event stream: {0}")]
    InvalidStream(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("divergent kernel integral: {0}")]
    DivergentIntegral(String),

    #[error("model is not stationary: {0}")]
    NonStationary(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("non-finite log-likelihood term at event {index}: {detail}")]
    NonFinite { index: usize, detail: String },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("backtest: {0}")]
    Backtest(String),

    #[error("schema mismatch: {0}")]
    Schema(#[from] serde_json::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. } | Error::Singular(_) | Error::Optimization(_)
        )
    }
}
