use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, StcError>;

#[derive(Debug, Error)]
pub enum StcError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The prior spectrum has zero power in at least one bin and no
    /// regularization floor was requested.
    #[error("singular deconvolution: prior spectrum has zero power and epsilon is 0")]
    SingularDeconvolution,

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("no frames in {dir} match pattern `{pattern}`")]
    EmptySequence { dir: PathBuf, pattern: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("ground truth has {boxes} boxes but the sequence has {frames} frames")]
    GroundTruthMismatch { frames: usize, boxes: usize },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(PathBuf),

    #[error("failed to decode image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl StcError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        StcError::InvalidInput(msg.into())
    }
}
