use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Process exit codes used by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Usage = 1,
    Data = 2,
    Numerical = 3,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed file {path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("empty manifest")]
    EmptyManifest,
    #[error("duplicate id \"{0}\"")]
    DuplicateId(String),
    #[error("artwork \"{id}\" has unknown artist label \"{artist}\"")]
    UnknownArtist { id: String, artist: String },
    #[error("artwork \"{0}\" is missing image dimensions")]
    MissingDimensions(String),
    #[error("no artworks survive resolution filter")]
    NothingSurvivesFilter,
    #[error("artist \"{artist}\" has {count} artworks, too few to populate train, val and test")]
    InsufficientArtworks { artist: String, count: usize },
    #[error("coverage requires ≥ {min_splits} splits")]
    CoverageInfeasible { min_splits: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("class \"{0}\" is absent from the training set")]
    ClassAbsent(String),
    #[error("numerical abort: {0}")]
    Numerical(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("mismatched artwork ids: \"{0}\" vs \"{1}\"")]
    MismatchedArtwork(String, String),
    #[error("patch ({row}, {col}) lies outside the {width}x{height} image")]
    OutOfBounds {
        row: usize,
        col: usize,
        width: u32,
        height: u32,
    },
    #[error("missing artifact {path}; run `{stage}` first")]
    MissingArtifact { path: PathBuf, stage: &'static str },
    #[error("image error on {path}: {message}")]
    Image { path: PathBuf, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn malformed(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Malformed {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub fn exit_kind(&self) -> ExitKind {
        match self {
            Error::InvalidArgument(_) => ExitKind::Usage,
            Error::Numerical(_) => ExitKind::Numerical,
            _ => ExitKind::Data,
        }
    }
}
