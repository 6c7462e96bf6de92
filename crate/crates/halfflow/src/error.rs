//! Error types shared by all modules.

use thiserror::Error;

/// Crate-wide error type.
///
/// The variants mirror the failure classes of the operations: invalid
/// configuration, bad data values, out-of-range arguments, mismatched
/// shapes, interface misuse, and numerical nonconvergence (which carries
/// the iteration history for post-mortem).
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("interface error: {0}")]
    Interface(String),

    #[error("nonconvergence after {} iterations (last differences {:?})",
            history.len(), history.iter().rev().take(3).collect::<Vec<_>>())]
    Nonconvergence { history: Vec<f64> },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
