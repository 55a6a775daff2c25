use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("fields live on different tori")]
    SpecMismatch,

    #[error("multiplier is not finite at frequency {k}")]
    NonFiniteMultiplier { k: f64 },

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("blow-up guard tripped at t = {t}: L2 norm {norm:e} exceeds {factor:e} x initial")]
    BlowUp { t: f64, norm: f64, factor: f64 },

    #[error("{what} requires K <= {cap}, got K = {k}")]
    CostCap { what: &'static str, cap: usize, k: usize },

    #[error("implicit stage solve did not converge at t = {t} (last update {residual:e})")]
    NoConvergence { t: f64, residual: f64 },

    #[error("resonant divisor at {tuple:?} where none can occur")]
    UnexpectedResonance { tuple: Vec<i64> },

    #[error("invariant `{name}` violated: {detail}")]
    Invariant { name: &'static str, detail: String },

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),

    #[error("time grid is not uniform (step {index} deviates by {deviation:e})")]
    NonUniformGrid { index: usize, deviation: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
