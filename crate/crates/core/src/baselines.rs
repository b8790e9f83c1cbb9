//! Comparison algorithms: inverse-distance WKNN and top-1 joint random forest.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fingerprint::FingerprintBase;
use crate::forest::{estimate_joint, ForestError, JointModel, PositionEstimate, ScoredCandidate};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("empty database")]
    EmptyDatabase,
    #[error(transparent)]
    Forest(#[from] ForestError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WknnConfig {
    pub k: usize,
    /// Added to every distance before inverting it.
    pub epsilon: f64,
    /// Z-score features with the database's column statistics.
    pub standardize: bool,
}

impl Default for WknnConfig {
    fn default() -> Self {
        Self {
            k: 3,
            epsilon: 1e-6,
            standardize: true,
        }
    }
}

/// A database prepared for nearest-neighbour queries.
#[derive(Debug, Clone)]
pub struct Wknn<'a> {
    db: &'a FingerprintBase,
    cfg: WknnConfig,
    mean: Vec<f64>,
    inv_std: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

impl<'a> Wknn<'a> {
    pub fn new(db: &'a FingerprintBase, cfg: WknnConfig) -> Result<Self, BaselineError> {
        if db.n_rps() == 0 {
            return Err(BaselineError::EmptyDatabase);
        }
        if cfg.k == 0 || cfg.k > db.n_rps() {
            return Err(BaselineError::Invalid(format!(
                "k = {} must lie in 1..={}",
                cfg.k,
                db.n_rps()
            )));
        }
        if !(cfg.epsilon > 0.0) {
            return Err(BaselineError::Invalid("epsilon must be positive".into()));
        }
        let d = db.n_features();
        let n = db.n_rps() as f64;
        let (mean, inv_std) = if cfg.standardize {
            let mean: Vec<f64> = (0..d)
                .map(|j| db.fingerprint.iter().map(|r| r[j]).sum::<f64>() / n)
                .collect();
            let inv_std = (0..d)
                .map(|j| {
                    let var = db
                        .fingerprint
                        .iter()
                        .map(|r| (r[j] - mean[j]).powi(2))
                        .sum::<f64>()
                        / n;
                    if var > 0.0 {
                        1.0 / var.sqrt()
                    } else {
                        1.0
                    }
                })
                .collect();
            (mean, inv_std)
        } else {
            (vec![0.0; d], vec![1.0; d])
        };
        let mut w = Self {
            db,
            cfg,
            mean,
            inv_std,
            rows: Vec::new(),
        };
        w.rows = db.fingerprint.iter().map(|r| w.transform(r)).collect();
        Ok(w)
    }

    fn transform(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(self.mean.iter().zip(&self.inv_std))
            .map(|(x, (m, s))| (x - m) * s)
            .collect()
    }

    pub fn estimate(&self, features: &[f64]) -> Result<PositionEstimate, BaselineError> {
        if features.len() != self.db.n_features() {
            return Err(BaselineError::Schema(format!(
                "query has {} features, database has {}",
                features.len(),
                self.db.n_features()
            )));
        }
        let q = self.transform(features);
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let d2: f64 = r.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2.sqrt(), i)
            })
            .collect();
        let coord = &self.db.coordinate;
        // distance, then coordinate, so row order never matters
        let cmp = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
            a.0.total_cmp(&b.0)
                .then(coord[a.1][0].total_cmp(&coord[b.1][0]))
                .then(coord[a.1][1].total_cmp(&coord[b.1][1]))
        };
        let k = self.cfg.k;
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
            dist.truncate(k);
        }
        dist.sort_by(cmp);
        let weights: Vec<f64> = dist
            .iter()
            .map(|(d, _)| 1.0 / (d + self.cfg.epsilon))
            .collect();
        let total: f64 = weights.iter().sum();
        let candidates = |axis: usize| -> Vec<ScoredCandidate<f64>> {
            dist.iter()
                .zip(&weights)
                .map(|((_, i), w)| ScoredCandidate {
                    value: coord[*i][axis],
                    score: w / total,
                })
                .collect()
        };
        let (cx, cy) = (candidates(0), candidates(1));
        let mean = |c: &[ScoredCandidate<f64>]| c.iter().map(|s| s.score * s.value).sum::<f64>();
        Ok(PositionEstimate {
            x: mean(&cx),
            y: mean(&cy),
            candidates_x: cx,
            candidates_y: cy,
        })
    }
}

/// One-off WKNN query. Build a [`Wknn`] once when issuing many queries.
pub fn wknn_estimate(
    db: &FingerprintBase,
    features: &[f64],
    cfg: &WknnConfig,
) -> Result<PositionEstimate, BaselineError> {
    Wknn::new(db, *cfg)?.estimate(features)
}

/// Plain random forest: the coordinate of the single most-voted RP.
pub fn rf_joint_estimate(
    model: &JointModel,
    features: &[f64],
) -> Result<PositionEstimate, BaselineError> {
    Ok(estimate_joint(model, features, 1)?)
}
