//! Verification harness, file formats and command-line driver for
//! [`magnus_delay_core`].
//!
//! - [`oracle`]: an independent method-of-steps solver for scalar problems.
//! - [`harness`]: reference solutions, convergence studies and run reports.
//! - [`config`]: the JSON run configuration and its validation.
//! - [`output`]: CSV and JSON writers (and readers for the CSV tables).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod harness;
pub mod oracle;
pub mod output;

pub use magnus_delay_core as core;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] magnus_delay_core::Error),
    #[error("reference rejected: differs from the method-of-steps oracle by {max_diff:.3e} (tolerance {tol:.1e})")]
    ReferenceUntrusted { max_diff: f64, tol: f64 },
    #[error("invalid study: {0}")]
    Study(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("{0}")]
    Config(#[from] config::ConfigError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
