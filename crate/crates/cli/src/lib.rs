//! Command-line front end: sequential solves, strategy-comparison grids
//! written as CSV, and random instance generation.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{cell_seed, cmd_compare, cmd_gen, cmd_solve, splitmix64, CompareReport, SolveReport};
pub use config::{Entry, ExperimentConfig, InstanceSource, RandomSpec, Settings};
pub use error::{CliError, Result};
pub use report::{csv_string, write_csv, ReportRow, Status, Summary, HEADER};
