//! End-to-end experiments: database construction, training, positioning,
//! error statistics, timing and output files.

mod config;
mod experiment;
mod output;
mod pipeline;

pub use config::{
    AccessPoint, Algorithm, ExperimentConfig, FeatureMode, ForestOptions, ScenarioChoice,
    ScenarioSpec, TpPlacement, WALL_MARGIN,
};
pub use experiment::{
    error_cdf, run_algorithm, run_experiment, sweep, train_config, ResultSet, RunResult, TimingRow,
};
pub use output::{emit_outputs, emit_timing, STATS_COLUMNS};
pub use pipeline::Pipeline;

use thiserror::Error;

use crate::baselines::BaselineError;
use crate::channel::ChannelError;
use crate::features::FeatureError;
use crate::fingerprint::DbError;
use crate::forest::ForestError;

/// Errors tagged with the pipeline stage that raised them.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("config: {0}")]
    Config(String),
    #[error("simulate: {0}")]
    Simulate(#[from] ChannelError),
    #[error("features: {0}")]
    Features(#[from] FeatureError),
    #[error("database: {0}")]
    Database(#[from] DbError),
    #[error("forest: {0}")]
    Forest(#[from] ForestError),
    #[error("baseline: {0}")]
    Baseline(#[from] BaselineError),
    #[error("output: {0}")]
    Output(String),
    #[error("config file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
