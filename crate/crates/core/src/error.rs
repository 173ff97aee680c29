use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },

    /// The temperature `-∂L/∂S` dropped to or below the configured floor.
    #[error("model domain error: temperature {temperature} is not above the floor {floor}")]
    ModelDomain { temperature: f64, floor: f64 },

    #[error("constraint one-forms are rank deficient: rank {rank} < {expected}")]
    ConstraintRank { rank: usize, expected: usize },

    #[error("Legendre inversion failed after {iterations} iterations (residual {residual:e})")]
    LegendreInversion { iterations: usize, residual: f64 },

    #[error("KKT matrix is singular (condition estimate {condition:e})")]
    KktSingular { condition: f64 },

    #[error("Newton iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("gradient check failed for block `{block}`: relative error {error:e} > {threshold:e}")]
    GradientCheck {
        block: &'static str,
        error: f64,
        threshold: f64,
    },

    #[error("initial state violates the mechanical constraints: |ω v| = {residual:e} > {tolerance:e}")]
    InconsistentInitialState { residual: f64, tolerance: f64 },

    #[error("step rejected: {quantity} = {value:e} exceeds {tolerance:e}")]
    StepRejected {
        quantity: &'static str,
        value: f64,
        tolerance: f64,
    },

    #[error("descriptor is not a certified Dirac structure")]
    Uncertified,
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            actual,
        }
    }

    pub(crate) fn param(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
