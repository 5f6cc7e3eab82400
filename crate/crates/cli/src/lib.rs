//! Command-line runner: one experiment per invocation, always leaving a `results.json` behind.

pub mod cli;
mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use cli::Common;
use config::{ExperimentConfig, Kind};
use error::CliError;
use output::{to_json, ResultsDocument, RunMeta};

pub use commands::Outcome;

pub const THREADS_ENV: &str = "IFS_RECUR_THREADS";

fn threads_from_env() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{THREADS_ENV} must be a nonnegative integer, got {v:?}"))),
        _ => Ok(0),
    }
}

/// Merges the config file, the subcommand and the flags into one config.
fn assemble(kind: Option<Kind>, common: &Common, flags: ExperimentConfig) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new(),
    };
    if let Some(k) = kind {
        match cfg.kind {
            Some(file_kind) if file_kind != k => {
                return Err(CliError::Config(format!("config file describes {file_kind}, command is {k}")));
            }
            _ => cfg.kind = Some(k),
        }
    }
    cfg.overlay(flags);
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    if common.threads.is_some() {
        cfg.threads = common.threads;
    }
    let b = &mut cfg.budgets;
    b.words = common.budget_words.unwrap_or(b.words);
    b.cells = common.budget_cells.unwrap_or(b.cells);
    b.samples = common.budget_samples.unwrap_or(b.samples);
    b.max_level = common.budget_max_level.unwrap_or(b.max_level);
    Ok(cfg)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn prepare_and_execute(cfg: &mut ExperimentConfig, out_dir: &Path, workers: &mut usize) -> Result<Outcome, CliError> {
    if cfg.kind.is_none() {
        return Err(CliError::Config("no experiment kind given (use a subcommand or `kind` in --config)".into()));
    }
    let threads = match cfg.threads {
        Some(t) => t,
        None => threads_from_env()?,
    };
    // a second build in the same process keeps the existing pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    *workers = rayon::current_num_threads();
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    commands::execute(cfg, out_dir)
}

/// Runs one experiment and returns the process exit code.
pub fn run(kind: Option<Kind>, common: Common, flags: ExperimentConfig) -> i32 {
    let started = SystemTime::now();
    let clock = Instant::now();
    let mut workers = 0;
    let (cfg, outcome) = match assemble(kind, &common, flags) {
        Ok(mut cfg) => {
            let out_dir = PathBuf::from(cfg.out.clone().unwrap_or_else(|| ".".into()));
            let outcome = prepare_and_execute(&mut cfg, &out_dir, &mut workers);
            (Some(cfg), outcome)
        }
        Err(e) => (None, Err(e)),
    };
    let out_dir = PathBuf::from(
        cfg.as_ref()
            .and_then(|c| c.out.clone())
            .or_else(|| common.out.clone())
            .unwrap_or_else(|| ".".into()),
    );

    let (code, reason) = match &outcome {
        Ok(_) => (0, None),
        Err(e) => (e.exit_code(), Some(e.reason())),
    };
    let empty = Vec::new();
    let doc = ResultsDocument {
        format_version: config::FORMAT_VERSION,
        kind: cfg.as_ref().and_then(|c| c.kind).or(kind),
        status: if code == 0 { "ok" } else { "error" },
        exit_code: code,
        reason,
        config: cfg.as_ref(),
        result: outcome.as_ref().ok().map(|o| &o.result),
        artifacts: outcome.as_ref().map(|o| o.artifacts.as_slice()).unwrap_or(&empty),
    };
    let meta = RunMeta {
        tool_version: env!("CARGO_PKG_VERSION"),
        started_unix: started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
        elapsed_seconds: clock.elapsed().as_secs_f64(),
        worker_threads: workers,
    };
    let written = std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))
        .and_then(|_| write_file(&out_dir.join("results.json"), &to_json(&doc)))
        .and_then(|_| write_file(&out_dir.join("results.meta.json"), &to_json(&meta)));
    if let Err(e) = written {
        eprintln!("{}", e.reason());
        if code == 0 {
            return e.exit_code();
        }
    }

    match outcome {
        Ok(o) => {
            print!("{}", o.stdout);
            0
        }
        Err(e) => {
            eprintln!("{}", e.reason());
            code
        }
    }
}
