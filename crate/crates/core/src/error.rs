use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition (dimension or degree mismatch).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("({s}, {t}) is outside the computed range; extend the resolution to s >= {s}, t >= {t}")]
    OutOfRange { s: u32, t: u32 },

    #[error("outside the valid region: {0}")]
    Region(String),

    /// A free summand reaches the edge of the range, so the group is infinite.
    #[error("pi({stem}, {weight}) is not finite: stem {stem} carries a free tower past the computed range")]
    Unbounded { stem: i64, weight: i64 },

    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },

    #[error("{file}:{line}: {reason}")]
    Parse {
        file: String,
        line: usize,
        reason: String,
    },

    #[error("unknown name `{0}`")]
    UnknownName(String),

    #[error("consistency failure: {0}")]
    Consistency(String),

    #[error("d{page} undetermined on {} class(es): {}", .classes.len(), .classes.join(", "))]
    Undetermined { page: u32, classes: Vec<String> },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
