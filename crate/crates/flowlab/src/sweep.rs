//! `flowlab sweep`: every `*.cfg` in a directory on a bounded worker pool.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::parse_config;
use crate::error::{HarnessError, Result};
use crate::run::{default_output_dir, run_experiment, write_failure_status};
use crate::write_json;

pub const THREADS_VAR: &str = "FLOWLAB_THREADS";

/// Worker count: `FLOWLAB_THREADS` when it holds a positive integer, else
/// the available parallelism.
pub fn worker_threads() -> usize {
    std::env::var(THREADS_VAR)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepEntry {
    pub config: PathBuf,
    pub output: PathBuf,
    pub status: String,
    pub exit_code: i32,
    pub error: Option<String>,
}

/// Config files of `dir` in name order.
pub fn sweep_configs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(HarnessError::io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "cfg"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(HarnessError::EmptySweep(dir.to_path_buf()));
    }
    Ok(files)
}

fn run_one(path: &Path, claimed: &BTreeMap<PathBuf, usize>, index: usize) -> SweepEntry {
    let failed = |output: PathBuf, err: HarnessError| {
        let _ = write_failure_status(&output, &err);
        SweepEntry {
            config: path.to_path_buf(),
            output,
            status: "aborted".into(),
            exit_code: err.exit_code(),
            error: Some(err.to_string()),
        }
    };
    let cfg = match parse_config(path) {
        Ok(cfg) => cfg,
        Err(e) => return failed(default_output_dir(path), e.into()),
    };
    if claimed
        .get(&cfg.output)
        .is_some_and(|&first| first != index)
    {
        let err = HarnessError::Io {
            path: cfg.output.clone(),
            source: std::io::Error::new(
                std::io::ErrorKind::AlreadyExists,
                "output directory shared with another config",
            ),
        };
        return SweepEntry {
            config: path.to_path_buf(),
            output: cfg.output,
            status: "aborted".into(),
            exit_code: err.exit_code(),
            error: Some(err.to_string()),
        };
    }
    match run_experiment(&cfg) {
        Ok(bundle) => SweepEntry {
            config: path.to_path_buf(),
            output: bundle.dir.clone(),
            status: bundle.status.status.clone(),
            exit_code: bundle.exit_code(),
            error: bundle.failure.as_ref().map(|e| e.to_string()),
        },
        Err(e) => failed(cfg.output.clone(), e),
    }
}

/// Runs every config of `dir` with at most `threads` concurrent workers and
/// writes `sweep.json` into `dir`. Each config keeps its own output
/// directory; a config whose directory is already claimed is not run.
pub fn sweep(dir: &Path, threads: usize) -> Result<Vec<SweepEntry>> {
    let files = sweep_configs(dir)?;
    let mut claimed = BTreeMap::new();
    for (i, f) in files.iter().enumerate() {
        if let Ok(cfg) = parse_config(f) {
            claimed.entry(cfg.output).or_insert(i);
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| HarnessError::Io {
            path: dir.to_path_buf(),
            source: std::io::Error::other(e),
        })?;
    let entries: Vec<SweepEntry> = pool.install(|| {
        files
            .par_iter()
            .enumerate()
            .map(|(i, f)| run_one(f, &claimed, i))
            .collect()
    });
    write_json(&dir.join("sweep.json"), &entries)?;
    Ok(entries)
}
