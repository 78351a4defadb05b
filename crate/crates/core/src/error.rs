use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("spec parse error at byte {offset}: {message} (near `{token}`)")]
    SpecParse {
        offset: usize,
        token: String,
        message: String,
    },

    #[error("warp requires a square image, got {width}x{height}")]
    NonSquareInput { width: u32, height: u32 },

    #[error("gaussian sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("plan expands to no entries")]
    EmptyPlan,

    #[error("stage tuple `{id}` is invalid: {message}")]
    InvalidTuple { id: String, message: String },

    #[error("example `{id}` has no stage {stage} required for direction {direction}")]
    MissingStage {
        id: String,
        stage: char,
        direction: String,
    },

    #[error("no accepted entries left for direction {0}")]
    EmptyAfterCuration(String),

    #[error("unknown example id `{0}`")]
    UnknownId(String),

    #[error("example id `{0}` appears in both the accept and reject lists")]
    CurationConflict(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("failed to spawn `{program}`: {source}")]
    Spawn {
        program: String,
        #[source]
        source: std::io::Error,
    },

    #[error("stage `{stage}` timed out after {seconds}s")]
    Timeout { stage: String, seconds: f64 },

    #[error("stage `{stage}` exited with {status}")]
    CommandFailed { stage: String, status: String },

    #[error("stage `{stage}` produced bad output {path}: {message}")]
    BadOutput {
        stage: String,
        path: PathBuf,
        message: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
