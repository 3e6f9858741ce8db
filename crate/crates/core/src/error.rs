use std::path::PathBuf;

/// Crate-wide error type.
///
/// `exit_code` partitions errors the way the CLI reports them: 2 for
/// configuration/parse problems, 3 for numerical failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("lattice too small: {n1}x{n2} (need at least 5x5)")]
    GridTooSmall { n1: usize, n2: usize },

    #[error("dimension mismatch: {0}")]
    Dim(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("Cholesky factorization failed: nonpositive pivot at index {pivot}")]
    Factorization { pivot: usize },

    #[error("Gibbs step failed at iteration {iteration}: {source}")]
    Step {
        iteration: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("rejection sampler exceeded {0} iterations")]
    RejectionCap(u64),

    #[error("empty sample stream")]
    EmptyStream,

    #[error("parse error at {path}:{line}:{col}: {msg}")]
    Parse {
        path: String,
        line: usize,
        col: usize,
        msg: String,
    },

    #[error("malformed sample stream: {0}")]
    Stream(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<String>, line: usize, col: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            col,
            msg: msg.into(),
        }
    }

    /// CLI process exit code: 2 for parse/config errors, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Factorization { .. }
            | Error::Step { .. }
            | Error::RejectionCap(_)
            | Error::EmptyStream => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
