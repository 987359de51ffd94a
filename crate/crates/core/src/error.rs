//! Crate-wide error type.
//!
//! Variants are grouped by what the caller can do about them: `Config`
//! failures are caller mistakes (bad parameters, impossible requests),
//! `Data` failures come from malformed or incompatible inputs, and
//! `Numerical` failures are runtime degeneracies (e.g. an empty spectrum).

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid parameter or configuration supplied by the caller.
    #[error("config error: {0}")]
    Config(String),

    /// Input data violates a precondition (grids, alignment, parsing).
    #[error("data error: {0}")]
    Data(String),

    /// A numerical degeneracy that prevents a meaningful result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
