use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),

    #[error("image size mismatch: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    SizeMismatch {
        expected_w: usize,
        expected_h: usize,
        got_w: usize,
        got_h: usize,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid pose: {0}")]
    InvalidPose(String),

    #[error("empty point cloud")]
    EmptyCloud,

    #[error("region has no usable observed depth")]
    EmptyRegion,

    #[error("no valid pixels to evaluate")]
    NoValidPixels,

    #[error("candidate pool too large for exhaustive search: {0} items (max {1})")]
    PoolTooLarge(usize, usize),

    #[error("voxel grid frames differ")]
    FrameMismatch,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("unresolvable reference `{reference}` from {from}")]
    UnresolvedReference { reference: String, from: PathBuf },

    #[error("infeasible synthetic scene: {0}")]
    InfeasibleScene(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn size(expected: (usize, usize), got: (usize, usize)) -> Self {
        Error::SizeMismatch {
            expected_w: expected.0,
            expected_h: expected.1,
            got_w: got.0,
            got_h: got.1,
        }
    }
}
