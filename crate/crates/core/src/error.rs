use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("integration failed at t = {t_reached}: {reason}")]
    IntegrationFailure { t_reached: f64, reason: String },

    #[error("time {t} outside orbit span [{t_min}, {t_max}]")]
    OutOfSpan { t: f64, t_min: f64, t_max: f64 },

    #[error("covector anchored at t = {anchor} cannot be transported from t = {from}")]
    AnchorMismatch { anchor: f64, from: f64 },

    #[error("gauge mismatch: {0}")]
    GaugeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for failures of the numerical integration itself, as opposed to
    /// misuse of the API.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::IntegrationFailure { .. })
    }
}
