//! File formats, the parallel simulation driver and the `fairrank` command
//! line on top of [`fairrank_core`].

pub mod cli;
pub mod csv;
pub mod grid;
pub mod io;

use std::path::PathBuf;

pub use fairrank_core as core;

use fairrank_core::metrics::MetricError;
use fairrank_core::model::ModelError;
use fairrank_core::rerank::RankError;
use fairrank_core::sim::ConfigError;

/// Everything that can go wrong outside the pure core.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Json {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid task: {0}")]
    Model(#[from] ModelError),
    #[error("ranking failed: {0}")]
    Rank(#[from] RankError),
    #[error("measurement failed: {0}")]
    Metric(#[from] MetricError),
    #[error("invalid simulation config: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Format(String),
    #[error("no rows to write")]
    EmptyResult,
}

impl Error {
    /// Process exit status for this error.
    ///
    /// 1 for I/O failures, 3 when candidates run out, 2 for everything the
    /// caller can fix by changing the input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 1,
            Error::Model(ModelError::InsufficientCandidates { .. })
            | Error::Rank(RankError::InsufficientCandidates { .. }) => 3,
            _ => 2,
        }
    }
}
