//! Batch experiment runner over `autolearn-core`.
//!
//! A run reads one config section, writes its CSV artifacts and a `manifest.json` into the
//! output directory, and reports success or the failure that stopped it.

pub mod config;
mod experiments;
mod run;

pub use config::{validate_config, ConfigErrors, ExperimentConfig, Kind, Value, Violation};
pub use run::{run_experiment, RunManifest, Status, MANIFEST_FILE, OUTPUT_DIR_ENV};

use std::path::PathBuf;

/// Why a run stopped.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Model(#[from] autolearn_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Failed(String),
}
