//! File formats, simulation, benchmarks and the pipeline behind the `ucal`
//! command-line tool.

pub mod benchmark;
pub mod config;
pub mod error;
pub mod format;
pub mod pipeline;
pub mod scene;

pub use error::{Error, Result};
