//! Configuration-driven runs of the `stp-core` experiments.
//!
//! A run reads one config document, executes its verb and writes into the
//! output directory: CSV tables, `summary.json`, SVG plots and finally
//! `manifest.json`. A directory without a manifest is an incomplete run.

pub mod artifacts;
pub mod config;
pub mod verbs;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use artifacts::{canonical_json, write_atomic, write_file, FileRecord};
pub use config::{parse_config, ConfigErrors, RunConfig, Verb};
use verbs::Gate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_GATE_FAILED: i32 = 2;

pub const TOOL: &str = "stp";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const SUMMARY: &str = "summary.json";
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration errors:\n{0}")]
    Config(#[from] ConfigErrors),
    #[error("output directory {0} is not empty (pass --overwrite to reuse it)")]
    OutputExists(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("run failed: {0}")]
    Execution(#[from] verbs::VerbError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        EXIT_ERROR
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub overwrite: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub verb: String,
    pub config_hash: String,
    pub realized: serde_json::Value,
    pub gates: Vec<Gate>,
    pub passed: bool,
    pub workers: usize,
    pub wall_clock_seconds: f64,
    pub files: Vec<FileRecord>,
}

impl RunManifest {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_OK
        } else {
            EXIT_GATE_FAILED
        }
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

fn prepare_dir(dir: &Path, opts: RunOptions) -> Result<(), RunError> {
    if dir.exists() {
        let non_empty = fs::read_dir(dir).map_err(io(dir))?.next().is_some();
        if non_empty && !opts.overwrite {
            return Err(RunError::OutputExists(dir.to_path_buf()));
        }
        // the old manifest goes first so an interrupted rerun reads as incomplete
        let manifest = dir.join(MANIFEST);
        if manifest.exists() {
            fs::remove_file(&manifest).map_err(io(&manifest))?;
        }
    } else {
        fs::create_dir_all(dir).map_err(io(dir))?;
    }
    Ok(())
}

/// Executes `cfg` into `cfg.out` and returns the manifest written last.
pub fn run(cfg: &RunConfig, opts: RunOptions) -> Result<RunManifest, RunError> {
    let dir = cfg.out.clone();
    prepare_dir(&dir, opts)?;
    let started = Instant::now();
    log::info!("{} run {} into {}", cfg.verb, &cfg.hash()[..12], dir.display());
    let output = stp_core::exec::with_workers(cfg.workers, || verbs::execute(cfg))?;
    let passed = output.gates.iter().all(|g| g.passed);

    let mut files = Vec::new();
    for (name, table) in &output.tables {
        files.push(write_file(&dir, name, table.to_csv().as_bytes()).map_err(io(&dir.join(name)))?);
    }
    for (name, plot) in &output.plots {
        files.push(write_file(&dir, name, plot.to_svg().as_bytes()).map_err(io(&dir.join(name)))?);
    }
    let summary = json!({
        "tool": TOOL,
        "version": VERSION,
        "verb": cfg.verb.name(),
        "config": cfg.canonical_map(),
        "config_hash": cfg.hash(),
        "realized": output.realized,
        "results": output.results,
        "gates": output.gates,
        "passed": passed,
        "notes": output.notes,
    });
    files.push(write_file(&dir, SUMMARY, canonical_json(&summary).as_bytes()).map_err(io(&dir.join(SUMMARY)))?);

    let manifest = RunManifest {
        tool: TOOL.into(),
        version: VERSION.into(),
        verb: cfg.verb.name().into(),
        config_hash: cfg.hash(),
        realized: output.realized,
        gates: output.gates,
        passed,
        workers: cfg.workers,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        files,
    };
    write_atomic(&dir, MANIFEST, canonical_json(&manifest).as_bytes()).map_err(io(&dir.join(MANIFEST)))?;
    Ok(manifest)
}

/// Parses `text`, applies environment overrides and runs it.
pub fn run_text(text: &str, opts: RunOptions) -> Result<RunManifest, RunError> {
    let mut cfg = parse_config(text)?;
    cfg.apply_env()?;
    run(&cfg, opts)
}
