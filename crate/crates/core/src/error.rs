use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("framing error: {0}")]
    Framing(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error(
        "target BER {target:e} is not bracketed by the curve (BER range {lowest:e}..{highest:e}); extend the Eb/N0 grid"
    )]
    UnbracketedTarget {
        target: f64,
        lowest: f64,
        highest: f64,
    },

    #[error("config line {line}: key `{key}`: {message}")]
    Config {
        key: String,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
