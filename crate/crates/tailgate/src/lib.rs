//! Command-line front end, configuration files and CSV output for
//! [`tailgate_core`].

pub mod config;
pub mod experiment;
pub mod output;
pub mod parallel;

pub use config::{parse_config, ConfigError, ExperimentSpec, Kind};
pub use experiment::{run_spec, Report};
pub use output::emit_series;
pub use parallel::Rayon;
