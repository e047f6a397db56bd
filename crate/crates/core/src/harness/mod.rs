//! Configuration-driven verification runs and their reports.

pub mod config;
pub mod report;
pub mod suites;

pub use config::{OutputFormat, RunConfig, SUITES};
pub use report::{CheckRecord, Param, Report, Status};
pub use suites::run_suite;
