use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("data format error: {0}")]
    DataFormat(String),
    #[error("label schema error: {0}")]
    LabelSchema(String),
    #[error("geo alignment error: {0}")]
    GeoAlign(String),
    #[error("segmentation error: {0}")]
    Segmentation(String),
    #[error("model error: {0}")]
    Model(String),
    /// Inputs that are individually valid but disagree with each other.
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DataFormat(_)
            | Error::LabelSchema(_)
            | Error::GeoAlign(_)
            | Error::Segmentation(_)
            | Error::Config(_)
            | Error::Io { .. } => 2,
            Error::Consistency(_) => 3,
            Error::Model(_) => 4,
        }
    }

    /// Prefix the message with the file it came from.
    pub(crate) fn in_file(self, path: &std::path::Path) -> Self {
        let p = path.display();
        match self {
            Error::DataFormat(m) => Error::DataFormat(format!("{p}: {m}")),
            Error::LabelSchema(m) => Error::LabelSchema(format!("{p}: {m}")),
            Error::GeoAlign(m) => Error::GeoAlign(format!("{p}: {m}")),
            Error::Consistency(m) => Error::Consistency(format!("{p}: {m}")),
            Error::Config(m) => Error::Config(format!("{p}: {m}")),
            other => other,
        }
    }
}
