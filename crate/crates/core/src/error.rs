use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("enabled connections form a cycle")]
    CycleDetected,

    #[error("no weight given for enabled connection {innovation}")]
    MissingWeight { innovation: u64 },

    #[error("genome has no enabled connection")]
    NoConnections,

    #[error("no valid connection left to add")]
    Saturated,

    #[error("genome has no hidden or output node")]
    NoMutableNodes,

    #[error("arity mismatch: task expects {expected_inputs}->{expected_outputs}, genome is {inputs}->{outputs}")]
    ArityMismatch {
        expected_inputs: usize,
        expected_outputs: usize,
        inputs: usize,
        outputs: usize,
    },

    #[error("invalid genome: {0}")]
    InvalidGenome(String),

    #[error("{path}: bad IDX magic {found:#010x}, expected {expected:#010x}")]
    BadMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("{path}: file truncated")]
    TruncatedFile { path: PathBuf },

    #[error("invalid dataset cache: {0}")]
    InvalidCache(String),

    #[error("output index {index} out of range (genome has {outputs} outputs)")]
    BadIndex { index: usize, outputs: usize },

    #[error("unknown task `{0}`")]
    UnknownTask(String),

    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
