use thiserror::Error;

/// Errors produced by the library and the command-line layer.
#[derive(Debug, Error)]
pub enum Error {
    /// Model parameters violate a structural constraint (positivity, moment
    /// bounds, degenerate jump law).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A caller-supplied argument is out of the operation's domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Adaptive quadrature exhausted its panel budget before reaching the
    /// requested tolerance. Carries the best estimate and its error bound.
    #[error("quadrature did not converge: estimate {estimate:e}, error bound {bound:e}, requested {requested:e}")]
    Quadrature {
        estimate: f64,
        bound: f64,
        requested: f64,
    },

    /// Configuration file could not be read, parsed, or validated.
    #[error("config: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the CLI: 2 for configuration errors,
    /// 3 for numerical-convergence errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Quadrature { .. } => 3,
            _ => 1,
        }
    }
}
