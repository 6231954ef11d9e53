use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or layer chains that do not fit together.
    #[error("configuration error: {0}")]
    Config(String),

    /// The loss graph cannot be differentiated by the tape.
    #[error("unsupported graph: {0}")]
    UnsupportedGraph(String),

    /// Non-finite values showed up where finite ones are required.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;
