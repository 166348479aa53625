use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition or invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A file exists but its contents do not follow the expected format.
    #[error("malformed {what} in {path}: {reason}")]
    Format {
        what: &'static str,
        path: PathBuf,
        reason: String,
    },

    /// Schema violation inside a manifest, with the 1-based line number
    /// (0 when the problem concerns the file as a whole).
    #[error("manifest {path}{}: {reason}", line_suffix(*.line))]
    Manifest {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    /// A manifest record references a file that does not exist.
    #[error("manifest {manifest} entry {entry}: {field} path {path} does not exist")]
    DanglingPath {
        manifest: PathBuf,
        entry: usize,
        field: &'static str,
        path: PathBuf,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::Format { .. } => "format",
            Error::Manifest { .. } => "manifest",
            Error::DanglingPath { .. } => "dangling_path",
            Error::Io { .. } => "io",
            Error::Image { .. } => "image",
        }
    }

    /// Process exit code: 3 for validation-class failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_)
            | Error::Format { .. }
            | Error::Manifest { .. }
            | Error::DanglingPath { .. } => 3,
            Error::Io { .. } => 4,
            Error::Image { source, .. } => match source {
                image::ImageError::IoError(_) => 4,
                _ => 3,
            },
        }
    }
}

fn line_suffix(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" line {line}")
    }
}
