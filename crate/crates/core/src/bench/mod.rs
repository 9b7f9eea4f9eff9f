//! End-to-end benchmark: configuration, the pipeline that fits every model
//! and runs every test, and report rendering.

mod config;
mod pipeline;
mod report;

pub use config::{
    default_recent_attributes, FeatureLists, MlpConfig, ModelKind, Orders, RecentSlot, RunConfig,
    Seeds, SvmConfig, TimeseriesConfig, SEED_ENV,
};
pub use pipeline::{ingest_summary, run_forecast, run_pipeline, IngestSummary};
pub use report::*;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl BenchError {
    /// Process exit code: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            _ => 1,
        }
    }
}
