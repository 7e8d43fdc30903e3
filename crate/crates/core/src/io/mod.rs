//! Dataset ingestion: the TUM RGB-D directory layout and the generic
//! directory format shared with the synthetic scene generator.

mod frame;
pub mod generic;
pub mod posefile;
pub mod tum;

pub use frame::Frame;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing index file {0}")]
    MissingIndex(String),
    #[error("no rgb/depth associations within the time window")]
    NoAssociations,
    #[error("malformed line {line} in {file}: {reason}")]
    Malformed {
        file: String,
        line: usize,
        reason: String,
    },
    #[error("frame count mismatch: meta declares {declared}, missing index {missing}")]
    CountMismatch { declared: usize, missing: usize },
    #[error("depth raster {0} has wrong byte length")]
    BadRaster(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("image error on {path}: {source}")]
    Image {
        path: String,
        #[source]
        source: image::ImageError,
    },
}

impl DatasetError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
