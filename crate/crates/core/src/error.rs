use thiserror::Error;

/// Errors raised by the simulation engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid system size N={n}: {reason}")]
    InvalidSize { n: usize, reason: &'static str },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: String,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("penalty lambda = {lambda} does not exceed 2*max(omega) = {bound}; MWIS optimum is not guaranteed")]
    PenaltyTooWeak { lambda: f64, bound: f64 },

    #[error("j = {twice_j}/2 is not an allowed spin sector for {n} spins")]
    InvalidSector { n: usize, twice_j: usize },

    #[error("unknown collective operator `{0}`")]
    UnknownOperator(String),

    #[error("time t = {t} is outside the protocol window [0, {total}]")]
    TimeOutOfRange { t: f64, total: f64 },

    #[error("system size N={n} exceeds the full-space oracle bound N<={max}")]
    OracleTooLarge { n: usize, max: usize },

    #[error("integrator failed at t = {t}: {reason}")]
    Integrator { t: f64, reason: String },

    #[error("state lost positivity at t = {t}: min eigenvalue {min_eigenvalue:e}")]
    Positivity { t: f64, min_eigenvalue: f64 },

    #[error("no admissible secondary gap minimum: {0}")]
    NoSecondaryMinimum(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("{source} (at {point})")]
    AtPoint { point: String, source: Box<Error> },
}

impl Error {
    /// Attaches the parameter point being evaluated.
    pub fn at(self, point: impl Into<String>) -> Self {
        Error::AtPoint {
            point: point.into(),
            source: Box::new(self),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Integrator { .. } | Error::Positivity { .. } | Error::NoSecondaryMinimum(_) | Error::Fit(_) => true,
            Error::AtPoint { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
