//! Command-line front end: run configuration and the preprocess, compare,
//! llm, report and synth verbs.

pub mod commands;
pub mod config;

pub use commands::{cmd_compare, cmd_llm, cmd_preprocess, cmd_report, cmd_synth, Outcome};
pub use config::RunConfig;
