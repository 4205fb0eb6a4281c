use std::path::PathBuf;

use pixgrasp_nn::NnError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid depth: {0}")]
    InvalidDepth(f64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid sample {id}: {reason}")]
    InvalidSample { id: String, reason: String },
    #[error("no grasp candidates")]
    NoGrasp,
    #[error("loss diverged at batch {batch}: {detail}")]
    Diverged { batch: String, detail: String },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("missing required flag: {0}")]
    MissingFlag(&'static str),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Tiff(#[from] tiff::TiffError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Nn(#[from] NnError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

/// Attach a path to `std::io` failures.
pub(crate) trait IoContext<T> {
    fn at(self, path: &std::path::Path) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: &std::path::Path) -> Result<T> {
        self.map_err(|e| Error::io(path, e))
    }
}
