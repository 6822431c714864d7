use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape spec exceeds the allowed canonical bounds (extent {extent:.3} > 0.45)")]
    SpecOutOfBounds { extent: f64 },

    #[error("volume has no zero crossing")]
    NoSurface,

    #[error("invalid volume: {0}")]
    InvalidVolume(String),

    #[error("quaternion is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("cell index {index} out of range for grid with {cells} cells")]
    IndexOutOfRange { index: usize, cells: usize },

    #[error("need at least {needed} volumes, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("resolution mismatch: expected {expected}, got {got}")]
    ResolutionMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("hit info does not belong to this render (volume or pose changed)")]
    StaleHitInfo,

    #[error("no valid points in the masked depth")]
    EmptyPointSet,

    #[error("could not generate a non-empty scene after {0} attempts")]
    DegenerateConfig(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed {kind} file: {reason}")]
    Format { kind: &'static str, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(kind: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            kind,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
