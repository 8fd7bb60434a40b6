use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid iteration space: {0}")]
    InvalidSpace(String),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("invalid schedule configuration: {0}")]
    InvalidSchedule(String),
    #[error("invalid runtime configuration: {0}")]
    InvalidRuntime(String),
    #[error("degenerate timing: core type {core_type} has zero average time")]
    DegenerateTiming { core_type: usize },
    #[error("environment variable {var}={value:?}: {reason}")]
    Env {
        var: &'static str,
        value: String,
        reason: String,
    },
    #[error("thread affinity unsupported: {0}")]
    AffinityUnsupported(String),
    #[error("failed to pin thread {thread} to core {core}: {reason}")]
    Affinity {
        thread: usize,
        core: usize,
        reason: String,
    },
    #[error("loop body failed at index {index}: {message}")]
    BodyFailed { index: i64, message: String },
    #[error("failed to spawn worker thread: {0}")]
    Spawn(#[source] std::io::Error),
    #[error("topology file {path}: {reason}")]
    TopologyFile { path: String, reason: String },
}
