//! File formats, pipelines and the command-line driver for `sdc-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod iris;
pub mod ledger;
pub mod pipeline;
pub mod schema;
pub mod tabular;

pub use error::{Error, Result};
