use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{Map, Value as Json};

use crate::config::{ExperimentConfig, Kind, Value};
use crate::{experiments, RunError};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Environment variable that replaces the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "AUTOLEARN_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

/// Record of one run, written as `manifest.json` next to the artifacts.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub kind: Kind,
    pub seed: u64,
    pub status: Status,
    pub version: &'static str,
    pub output: PathBuf,
    /// Parameters with defaults filled in.
    pub config: BTreeMap<String, Value>,
    pub duration_s: f64,
    /// Artifacts relative to the output directory, sorted.
    pub files: Vec<String>,
    pub summary: Map<String, Json>,
    pub failure: Option<String>,
}

impl RunManifest {
    pub fn succeeded(&self) -> bool {
        self.status == Status::Ok
    }
}

/// Output directory bookkeeping: every artifact goes through here so the manifest can list it.
pub(crate) struct Artifacts {
    root: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn new(root: &Path) -> Self {
        Artifacts {
            root: root.to_path_buf(),
            files: Vec::new(),
        }
    }

    pub(crate) fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub(crate) fn record(&mut self, name: impl Into<String>) {
        self.files.push(name.into());
    }

    /// Creates `name`, hands the buffered writer to `body`, and flushes.
    pub(crate) fn write(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<(), RunError> {
        let path = self.path(name);
        let io = |source| RunError::Io {
            path: path.clone(),
            source,
        };
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io)?;
        }
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        self.record(name);
        body(&mut w).and_then(|_| w.flush()).map_err(io)
    }
}

/// Runs a validated config and writes its manifest, also when the run fails.
pub fn run_experiment(cfg: &ExperimentConfig) -> RunManifest {
    let start = Instant::now();
    let mut out = Artifacts::new(&cfg.output);
    let result = fs::create_dir_all(&cfg.output)
        .map_err(|source| RunError::Io {
            path: cfg.output.clone(),
            source,
        })
        .and_then(|_| experiments::dispatch(cfg, &mut out));
    let (summary, failure) = match result {
        Ok(summary) => (summary, None),
        Err(e) => (Map::new(), Some(e.to_string())),
    };
    let mut files = out.files;
    files.sort();
    files.dedup();
    let mut manifest = RunManifest {
        kind: cfg.kind,
        seed: cfg.seed,
        status: if failure.is_none() { Status::Ok } else { Status::Failed },
        version: env!("CARGO_PKG_VERSION"),
        output: cfg.output.clone(),
        config: cfg.params().clone(),
        duration_s: start.elapsed().as_secs_f64(),
        files,
        summary,
        failure,
    };
    if let Err(e) = write_manifest(&manifest) {
        manifest.status = Status::Failed;
        let note = format!("could not write manifest: {e}");
        manifest.failure = Some(match manifest.failure.take() {
            Some(first) => format!("{first}; {note}"),
            None => note,
        });
    }
    manifest
}

fn write_manifest(m: &RunManifest) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(m).map_err(std::io::Error::other)?;
    fs::write(m.output.join(MANIFEST_FILE), text + "\n")
}
