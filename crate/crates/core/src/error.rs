use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    /// Field-level validation failure; `field` is a dotted config path.
    #[error("invalid value for `{field}`: {message}")]
    Invalid { field: String, message: String },

    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("sampling infeasible: {0}")]
    SamplingInfeasible(String),

    #[error("positivity violated: {0}")]
    Positivity(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("state blew up at step {step}")]
    BlowUp { step: usize },

    #[error("non-finite loss at epoch {epoch} (sample {sample})")]
    NonFiniteLoss { epoch: usize, sample: usize },

    #[error("reference solver failed: {0}")]
    Reference(String),

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Nn(#[from] dool_nn::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 2 for bad input or configuration, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BlowUp { .. }
            | Error::NonFiniteLoss { .. }
            | Error::Reference(_)
            | Error::SamplingInfeasible(_)
            | Error::Positivity(_)
            | Error::Domain(_) => 3,
            Error::Nn(dool_nn::Error::Numerical(_)) => 3,
            _ => 2,
        }
    }

    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
