//! File formats, parameter overrides, ensembles and the command line around
//! `ccmap-core`.

pub mod cli;
pub mod ensemble;
pub mod error;
pub mod output;
pub mod params;
pub mod scenario_file;

pub use error::{ConfigError, RunError};
pub use params::{Params, Targeting};
