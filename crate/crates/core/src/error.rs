use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh has no face with positive area")]
    MeshDegenerate,
    #[error("mesh face {face} references vertex {index} but only {count} vertices exist")]
    IndexOutOfRange { face: usize, index: usize, count: usize },
    #[error("point set has zero or near-zero extent")]
    DegenerateExtent,
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("scale must be strictly positive, got {0}")]
    InvalidScale(f64),
    #[error("unknown model id `{0}`")]
    UnknownModel(String),
    #[error("model id `{0}` already present")]
    DuplicateModel(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no retrieval candidates{}", .category.as_ref().map(|c| format!(" for category `{c}`")).unwrap_or_default())]
    NoCandidates { category: Option<String> },
    #[error("invalid front-face target: {0}")]
    InvalidTarget(String),
    #[error("could not place object {object} after {attempts} attempts")]
    PlacementFailed { object: usize, attempts: usize },
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("unsupported feature: {0}")]
    UnsupportedFeature(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("version mismatch: expected {expected}, found {found}")]
    Version { expected: u32, found: u32 },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable identifier of the error class, used in machine-readable
    /// CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MeshDegenerate => "mesh_degenerate",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::DegenerateExtent => "degenerate_extent",
            Error::EmptyCloud => "empty_cloud",
            Error::InvalidInput(_) => "invalid_input",
            Error::InvalidScale(_) => "invalid_scale",
            Error::UnknownModel(_) => "unknown_model",
            Error::DuplicateModel(_) => "duplicate_model",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NoCandidates { .. } => "no_candidates",
            Error::InvalidTarget(_) => "invalid_target",
            Error::PlacementFailed { .. } => "placement_failed",
            Error::Parse { .. } => "parse_error",
            Error::UnsupportedFeature(_) => "unsupported_feature",
            Error::Format(_) => "format_error",
            Error::Version { .. } => "version_error",
            Error::Io { .. } => "io_error",
        }
    }
}
