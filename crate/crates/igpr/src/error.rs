use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Linear-algebra or quadrature breakdown, carrying a diagnostic.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A forward model produced a non-finite or out-of-range state.
    #[error("simulation failure in `{model}`: {reason}")]
    Simulation { model: &'static str, reason: String },

    /// The rejection oracle did not accumulate enough acceptances.
    #[error("insufficient acceptances: got {got}, need {need}; increase n_draws or epsilon_ref")]
    InsufficientAcceptances { got: usize, need: usize },

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
