//! Operational surface around `gridtune-core`: CSV datasets and histograms,
//! synthetic data, query workloads, evaluation, the experiment runner and the
//! brute-force verification oracle.

pub mod config;
pub mod eval;
pub mod experiment;
pub mod io;
pub mod oracle;
pub mod synth;
pub mod workload;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },
    #[error(transparent)]
    Core(#[from] gridtune_core::Error),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
