//! Error type shared by all operations in this crate.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("reading {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("decoding PNG {path}")]
    PngDecode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("encoding PNG {path}")]
    PngEncode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: unsupported PNG pixel layout {detail}")]
    UnsupportedPng { path: PathBuf, detail: String },

    /// Two grids that must be congruent are not. Shapes are (height, width, channels).
    #[error("shape mismatch: {expected:?} vs {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize, usize),
        actual: (usize, usize, usize),
    },

    #[error("invalid parameter: {0}")]
    Param(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub(crate) fn shape(
        expected: (usize, usize, usize),
        actual: (usize, usize, usize),
    ) -> Self {
        Error::ShapeMismatch { expected, actual }
    }
}
