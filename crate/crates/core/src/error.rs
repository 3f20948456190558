use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty data: {0}")]
    EmptyData(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("insufficient tail observations: {0}")]
    InsufficientTail(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate tail: {0}")]
    DegenerateTail(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("degenerate outcome: {0}")]
    DegenerateOutcome(String),
    #[error("degenerate design: {0}")]
    DegenerateDesign(String),
    #[error("initial point violates the cone constraint (min slack {0:e})")]
    Infeasible(f64),
    #[error("cone violation: {0}")]
    ConeViolation(String),
    #[error("flat likelihood: {0}")]
    FlatLikelihood(String),
    #[error("effective sample: {0}")]
    EffectiveSample(String),
    #[error("no contributing units")]
    NoContributingUnits,
    #[error("unknown unit `{0}`")]
    MissingUnit(String),
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error("{0}")]
    InvalidInput(String),
}

impl Error {
    /// True for errors caused by malformed inputs rather than by the data
    /// failing to support an estimate.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_) | Error::InvalidInput(_) | Error::Domain(_)
        )
    }
}
