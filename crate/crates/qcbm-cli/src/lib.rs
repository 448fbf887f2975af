//! IO companion to `qcbm-core`: config files, dataset loading, artifact
//! formats, run orchestration and the estimator benchmarks. Everything
//! here assumes std; the numerics all live in the core crate.

pub mod bench;
pub mod config;
pub mod dataset;
pub mod formats;
pub mod runner;

use std::sync::OnceLock;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum LogLevel {
    Quiet,
    Info,
    Debug,
}

fn log_level() -> LogLevel {
    static LEVEL: OnceLock<LogLevel> = OnceLock::new();
    *LEVEL.get_or_init(|| match std::env::var("QCBM_LOG").as_deref() {
        Ok("quiet") | Ok("0") => LogLevel::Quiet,
        Ok("debug") | Ok("2") => LogLevel::Debug,
        _ => LogLevel::Info,
    })
}

/// Progress note on stderr. Silenced by `QCBM_LOG=quiet`.
pub fn info(message: &str) {
    if log_level() >= LogLevel::Info {
        eprintln!("qcbm: {message}");
    }
}

/// Chatty diagnostics on stderr. Enabled by `QCBM_LOG=debug`.
pub fn debug(message: &str) {
    if log_level() >= LogLevel::Debug {
        eprintln!("qcbm[debug]: {message}");
    }
}
