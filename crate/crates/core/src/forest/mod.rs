//! Random-forest classifiers over fingerprints and the weighted position
//! decoder built on them.

mod io;
mod model;
mod tree;
mod wrf;

pub use io::{ModelBundle, MODEL_SCHEMA_VERSION};
pub use model::{
    oob_accuracy, train, train_axis, train_joint, tree_seed, Axis, AxisModel, Bags, ForestModel,
    JointModel, TrainConfig, WrfModel,
};
pub use tree::{
    best_split, draw_features, gini, majority, tree_generate, DecisionTree, FeatureSampling,
    GrowOptions, Node, Split,
};
pub use wrf::{
    estimate_joint, estimate_position, predict_scores, votes, weighted_mean, PositionEstimate,
    ScoredCandidate,
};

use thiserror::Error;

use crate::fingerprint::DbError;

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("degenerate training data: {0}")]
    Degenerate(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("unsupported model version {found} (this build reads version {supported})")]
    Version { found: u64, supported: u32 },
    #[error("malformed model file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Database(#[from] DbError),
}
