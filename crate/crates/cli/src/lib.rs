//! Library side of the `dvlaccel` command-line tool: run configuration,
//! pipeline stages, estimator comparison, and plot emission.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod plot;
pub mod report;

pub use error::{CliError, Stage};
