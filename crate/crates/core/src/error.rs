use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("cannot decode image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{0}")]
    Invalid(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("empty mask{}", .0.as_ref().map(|id| format!(" for {id}")).unwrap_or_default())]
    EmptyMask(Option<String>),

    #[error("degenerate ROI for {0}")]
    DegenerateRoi(&'static str),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("unknown id {0:?}")]
    UnknownId(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("did not converge: {0}")]
    NoConvergence(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        match source.kind() {
            csv::ErrorKind::Io(_) => {
                let path = path.into();
                match source.into_kind() {
                    csv::ErrorKind::Io(source) => Error::Io { path, source },
                    _ => unreachable!(),
                }
            }
            _ => Error::Csv {
                path: path.into(),
                source,
            },
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for failures of the filesystem itself rather than of the content.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
