use std::path::PathBuf;

use thiserror::Error;

use crate::io::ParseError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid depth {0} (must be > 0)")]
    InvalidDepth(f64),
    #[error("pixel ({u}, {v}) outside {width}x{height} image")]
    OutOfBounds { u: f64, v: f64, width: usize, height: usize },
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch { expected: (usize, usize), found: (usize, usize) },
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("rotation is not orthonormal with determinant +1 (deviation {0:e})")]
    NonOrthonormalRotation(f64),
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("empty contour: no pixel survived vote aggregation")]
    EmptyContour,
    #[error("empty vote list")]
    EmptyVotes,
    #[error("empty mask")]
    EmptyMask,
    #[error("mask covers the entire image")]
    FullMask,
    #[error("degenerate depth: {0}")]
    DegenerateDepth(String),
    #[error("singular normal equations: {0}")]
    Singular(String),
    #[error("timestep {t} outside schedule of {steps} steps")]
    Timestep { t: usize, steps: usize },
    #[error("strength {0} outside [0, 1]")]
    Strength(f64),
    #[error("{count} unseen pixel(s) without valid depth, first: {first:?}")]
    MissingDepth { count: usize, first: Vec<(usize, usize)> },
    #[error("invalid depth on mask at pixel ({0}, {1})")]
    InvalidDepthOnMask(usize, usize),
    #[error("image smaller than 3x3")]
    TooSmall,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid scene: {0}")]
    Scene(String),
    #[error("missing input: {0}")]
    Missing(String),
    #[error("prior failed: {0}")]
    Prior(String),
    #[error("stage {stage} failed: {source}")]
    Stage { stage: &'static str, source: Box<Error> },
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code: 2 for configuration or validation problems, 3 for
    /// bad or missing data, 4 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::Config(_)
            | Error::Scene(_)
            | Error::Strength(_)
            | Error::InvalidIntrinsics(_)
            | Error::NonOrthonormalRotation(_) => 2,
            Error::Internal(_) | Error::Prior(_) => 4,
            _ => 3,
        }
    }

    /// Tags the error with the pipeline stage it came from (once).
    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage { stage, source: Box::new(e) },
        }
    }
}
