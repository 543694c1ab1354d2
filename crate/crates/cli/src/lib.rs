//! Configuration-driven experiment runner for `graph-mbo`.

pub mod config;
pub mod run;

pub use config::{Experiment, ExperimentConfig, GridConfig, GridFieldKind, Overrides};
pub use run::run;
