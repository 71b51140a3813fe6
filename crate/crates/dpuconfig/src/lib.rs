//! File formats, run configuration and subcommands on top of `dpuconfig-core`.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod corpus_csv;
pub mod error;
pub mod manifest;
pub mod report;
pub mod timeline;

pub use config::{Overrides, RunConfig};
pub use error::{Error, Result};
