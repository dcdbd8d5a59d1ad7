//! Experiment harness for `saddleflow-core`: dataset and trace files,
//! JSON configuration, the experiment drivers behind the CLI, and the
//! built-in validation suites.

pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod validate;

pub use error::{CliError, Result};
