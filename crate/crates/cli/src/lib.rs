//! Command-line front end: JSON configs in, audit tables, CSV audits and
//! simulation records out.

pub mod commands;
pub mod config;
pub mod error;
pub mod expr;
pub mod render;

pub use config::{load_config, parse_config, Config, Problem, ProcedureKind, RawConfig};
pub use error::{CliError, Result};
