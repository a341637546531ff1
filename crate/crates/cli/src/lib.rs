//! Scenario configuration, runner and comparison tools for `fracflow`.

pub mod compare;
pub mod config;
pub mod error;
pub mod runner;
pub mod scenarios;

pub use compare::{compare, CompareReport, Oracle};
pub use config::Scenario;
pub use error::{CliError, CliResult};
pub use runner::{run, solve, Solved, Summary};
pub use scenarios::{builtin, builtin_names, BUILTINS};
