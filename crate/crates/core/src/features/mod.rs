//! Path-parameter estimation from CSI and maximum-power-path fingerprint
//! features.

mod mp;
mod music;
mod smoothing;

use thiserror::Error;

pub use mp::{extract_mp, oracle_features, MpFeature};
pub use music::{
    count_sources, estimate_paths, music_estimate, EstimatedPath, EstimatorConfig, SearchGrid,
};
pub use smoothing::{backward, fb_smooth, forward_covariance, SmoothedCovariance, SubarrayDims};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("invalid subarray dimensions: {0}")]
    InvalidDims(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numeric degeneracy: {0}")]
    NumericDegeneracy(String),
    #[error("no usable path: link is in outage")]
    Outage,
}
