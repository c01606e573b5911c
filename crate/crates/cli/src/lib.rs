//! Command-line surface of ggmeval: dataset statistics, synthetic corpora,
//! evaluation runs and violin plots.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;
pub mod report;

pub use commands::{run, Cli};
pub use config::{DatasetSource, RunConfig, SynthSpec};
pub use error::CliError;
pub use report::{evaluate, ReportDocument};
