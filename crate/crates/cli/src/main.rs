use std::path::{Path, PathBuf};
use std::process::ExitCode;

use autolearn_cli::{run_experiment, validate_config, ExperimentConfig, OUTPUT_DIR_ENV};
use clap::{Parser, Subcommand};

/// Runs one configured experiment and writes its CSV artifacts plus a manifest.
#[derive(Parser)]
#[command(name = "autolearn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a config and run the experiment.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads for parallel sections (outputs do not depend on it).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a config and report every violation.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

const CONFIG_ERROR: u8 = 1;
const RUN_FAILURE: u8 = 2;

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    let raw = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        ExitCode::from(CONFIG_ERROR)
    })?;
    validate_config(&raw).map_err(|errors| {
        for v in &errors.0 {
            eprintln!("{v}");
        }
        ExitCode::from(CONFIG_ERROR)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                println!("{}: valid {} config", config.display(), cfg.kind);
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Run { config, threads } => {
            let mut cfg = match load(&config) {
                Ok(cfg) => cfg,
                Err(code) => return code,
            };
            if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
                cfg.output = dir.into();
            }
            if let Some(n) = threads {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("thread pool: {e}");
                    return ExitCode::from(RUN_FAILURE);
                }
            }
            let manifest = run_experiment(&cfg);
            match &manifest.failure {
                None => {
                    println!("{} finished; {} files in {}", cfg.kind, manifest.files.len(), cfg.output.display());
                    ExitCode::SUCCESS
                }
                Some(msg) => {
                    eprintln!("{} failed: {msg}", cfg.kind);
                    ExitCode::from(RUN_FAILURE)
                }
            }
        }
    }
}
