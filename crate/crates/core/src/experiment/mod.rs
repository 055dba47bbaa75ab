//! Declarative experiments: a TOML config naming a model, initial states,
//! measurements and a time grid, and a runner producing the bound tables and
//! a JSON summary.
//!
//! See `configs/README.md` in the repository for the schema.

mod config;
mod run;

pub use config::{
    ConfigIssue, EstimatorConfig, ExperimentConfig, MeasurementConfig, ModelConfig, Seeds, SetMode,
    StateConfig, TimeConfig,
};
pub use run::{
    prepare_measurements, prepare_states, run, Bracket, EntropyRecord, MomentResult, Provenance,
    ResultRecord, Summary, System, TightResult,
};
