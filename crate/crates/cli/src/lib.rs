pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod plot;

pub use config::{DataSource, Overrides, RunConfig};
pub use error::CliError;
