//! Command-line orchestration of the table QA pipeline: annotation,
//! retrieval, generation, evaluation and corpus statistics.
//!
//! Every command reads JSONL inputs, writes its outputs atomically and
//! reports malformed input by file, line and field.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod providers;
pub mod records;
pub mod report;

pub use commands::*;
pub use config::{ProviderSpec, RunConfig};
pub use error::{CliError, ErrorReport};
pub use providers::{build as build_providers, Providers};
