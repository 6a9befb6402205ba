use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke a documented precondition (dimensions, ordering, ranges).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("intensity {value} < 0 at t = {time} (internal consistency error)")]
    NegativeIntensity { time: f64, value: f64 },

    #[error("fit diverged at iteration {iteration}: {what} is not finite")]
    FitDivergence { iteration: usize, what: &'static str },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("thinning bound failed after {escalations} escalations at t = {time}")]
    BoundFailure { time: f64, escalations: usize },

    /// Usually a supercritical impact function (∫φ ≥ 1).
    #[error("simulation stopped at t = {time} after {events} events (limit reached)")]
    EventLimit { time: f64, events: usize },

    #[error("no baseline for subject `{0}`")]
    UnknownSubject(String),

    #[error("cannot encode {block}: unknown option `{label}`")]
    Encoding { block: &'static str, label: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
