use thiserror::Error;

#[derive(Debug, Error)]
pub enum IpadError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An oracle produced NaN or infinity.
    #[error("non-finite value produced by {oracle}")]
    NonFinite { oracle: &'static str },

    #[error("initial point is infeasible (objective is {0})")]
    InfeasibleInit(f64),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error(transparent)]
    Image(#[from] crate::data::image::ImageError),
}

pub type Result<T, E = IpadError> = std::result::Result<T, E>;
